"""Adoption-probability schedules on the DAG and top-k truth campaigner selection.

``mval[u, i]`` estimates the probability that ``u`` adopts the misinformation at
round ``i`` when it starts from ``R``; ``tval[u, i]`` is the same estimate for
the truth started from one candidate. Within a round a child's entry is
accumulated over every frontier parent as

    x <- x + (1 - x) * (1 - sum(x_u[1:i])) * P(v, u) * bias(u) * x_v[i - 1]

which equals ``1 - prod(1 - factor)`` over parents, so the result does not
depend on the order parents are visited (up to rounding). Biases are the
initial values; their decay during a cascade is deliberately ignored here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .graph import Dag
from .propagation import BiasTable

DEFAULT_THETA = 1e-6


@dataclass
class ProbSchedule:
    values: np.ndarray  # shape (n, alpha + 1)
    role: str  # "mval" or "tval"

    @property
    def alpha(self) -> int:
        return self.values.shape[1] - 1

    def __getitem__(self, node: int) -> np.ndarray:
        return self.values[node]


@dataclass(frozen=True)
class TruthScoreValue:
    candidate: int
    score: float


def _sweep(
    dag: Dag,
    seeds: np.ndarray,
    bias: np.ndarray,
    alpha: int,
    theta: float,
    blocked: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    n = dag.n
    val = np.zeros((n, alpha + 1))
    val[seeds, 0] = 1.0
    frontier = np.zeros(n, dtype=bool)
    frontier[seeds] = True
    touched = np.zeros(n, dtype=bool)
    done = np.zeros(n)  # sum of entries 1..i-1
    indptr, src, dst, prob = dag.out_indptr, dag.src, dag.dst, dag.prob
    deg = np.diff(indptr)
    for i in range(1, alpha + 1):
        act = np.flatnonzero(frontier & (val[:, i - 1] > theta))
        counts = deg[act]
        total = int(counts.sum())
        if total == 0:
            break
        e = np.repeat(indptr[act] - (np.cumsum(counts) - counts), counts) + np.arange(total)
        if blocked is not None:
            e = e[~blocked[dst[e]]]
            if not len(e):
                break
        u = dst[e]
        factor = (1.0 - done[u]) * prob[e] * bias[u] * val[src[e], i - 1]
        # log space keeps tiny factors from rounding to zero
        log_keep = np.zeros(n)
        with np.errstate(divide="ignore"):
            np.add.at(log_keep, u, np.log1p(-factor))
        hit = np.zeros(n, dtype=bool)
        hit[u] = True
        val[hit, i] = -np.expm1(log_keep[hit])
        touched |= hit
        frontier = hit
        done += val[:, i]
    return val, touched


def _node_array(nodes, n) -> np.ndarray:
    arr = np.unique(np.fromiter((int(x) for x in nodes), dtype=np.int64))
    if len(arr) and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError("node id out of range")
    return arr


def compute_mval(
    dag: Dag,
    R: Iterable[int],
    initial_biases: BiasTable,
    alpha: int,
    theta: float = DEFAULT_THETA,
) -> tuple[ProbSchedule, frozenset[int]]:
    """Misinformation schedule from ``R`` and the set ``A`` of nodes it touched."""
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if theta < 0:
        raise ValueError("theta must be non-negative")
    seeds = _node_array(R, dag.n)
    if not len(seeds):
        raise ValueError("R must be non-empty")
    val, touched = _sweep(dag, seeds, initial_biases.bm, alpha, theta)
    return ProbSchedule(val, "mval"), frozenset(np.flatnonzero(touched).tolist())


def compute_tval(
    dag: Dag,
    w: int,
    R: Iterable[int],
    initial_biases: BiasTable,
    alpha: int,
    theta: float = DEFAULT_THETA,
) -> tuple[ProbSchedule, frozenset[int]]:
    """Truth schedule started from candidate ``w``; nodes of ``R`` are never updated."""
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    rumor = _node_array(R, dag.n)
    if w in set(rumor.tolist()):
        raise ValueError(f"candidate {w} is a misinformation starter")
    blocked = np.zeros(dag.n, dtype=bool)
    blocked[rumor] = True
    val, touched = _sweep(dag, np.array([w]), initial_biases.bt, alpha, theta, blocked)
    return ProbSchedule(val, "tval"), frozenset(np.flatnonzero(touched).tolist())


def truth_score(
    mval: ProbSchedule,
    A: Iterable[int],
    tval: ProbSchedule,
    B: Iterable[int],
    alpha: int,
) -> float:
    """Sum of ``tval[v, 1..alpha]`` over ``v`` in ``A & B``."""
    if mval.alpha != alpha or tval.alpha != alpha:
        raise ValueError(f"schedules have alpha {mval.alpha}/{tval.alpha}, expected {alpha}")
    common = sorted(set(A) & set(B))
    if not common:
        return 0.0
    return float(tval.values[common, 1:].sum())


def truthscore_ranking(
    dag: Dag,
    R: Iterable[int],
    P: Sequence[int],
    initial_biases: BiasTable,
    alpha: int,
    theta: float = DEFAULT_THETA,
) -> list[TruthScoreValue]:
    """Score every candidate in ``P``; highest score first, ties by ascending id."""
    R = list(R)
    P = sorted(set(int(p) for p in P))
    if set(P) & set(R):
        raise ValueError("candidate set overlaps the misinformation starters")
    mval, A = compute_mval(dag, R, initial_biases, alpha, theta)
    scores = []
    for w in P:
        tval, B = compute_tval(dag, w, R, initial_biases, alpha, theta)
        scores.append(TruthScoreValue(w, truth_score(mval, A, tval, B, alpha)))
    scores.sort(key=lambda s: (-s.score, s.candidate))
    return scores


def select_top_k_truthscore(
    dag: Dag,
    R: Iterable[int],
    P: Sequence[int],
    k: int,
    initial_biases: BiasTable,
    alpha: int,
    theta: float = DEFAULT_THETA,
) -> list[int]:
    """The ``k`` candidates with highest TruthScore (k-TruthScore)."""
    if k > len(set(P)):
        raise ValueError(f"k={k} exceeds the {len(set(P))} prospective campaigners")
    ranking = truthscore_ranking(dag, R, P, initial_biases, alpha, theta)
    return [s.candidate for s in ranking[:k]]


def write_schedule(schedule: ProbSchedule, stream: TextIO, nodes: Iterable[int] | None = None) -> None:
    """One ``node,role,v0,...,v_alpha`` line per node (all nodes unless ``nodes`` given)."""
    rows = range(schedule.values.shape[0]) if nodes is None else sorted(nodes)
    for u in rows:
        vals = ",".join(repr(float(x)) for x in schedule.values[u])
        stream.write(f"{u},{schedule.role},{vals}\n")
