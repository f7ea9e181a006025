"""Competing campaigner selectors restricted to the candidate pool.

``tmb`` ranks candidates by the drop in expected misinformation reach when the
candidate is deleted from the graph. ``tib`` first estimates which nodes the
misinformation can reach by the deadline, then ranks candidates by how many of
those nodes their own truth cascade reaches. Both are Monte-Carlo estimates on
common random numbers, so equal seeds give equal rankings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import DirectedGraph
from .propagation import LINEAR_HALVING, M, T, BiasTable, simulate_final_states, simulate_seeds


@dataclass(frozen=True)
class InfluenceReduction:
    candidate: int
    h: float


def _check_pool(P: Sequence[int], k: int | None) -> list[int]:
    pool = sorted(set(int(p) for p in P))
    if k is not None and k > len(pool):
        raise ValueError(f"k={k} exceeds the {len(pool)} prospective campaigners")
    return pool


def _top(scored: list[tuple[int, float]], k: int | None) -> list[tuple[int, float]]:
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored if k is None else scored[:k]


def tmb_ranking(
    graph: DirectedGraph,
    R: Iterable[int],
    P: Sequence[int],
    biases: BiasTable,
    rule=LINEAR_HALVING,
    alpha: int = 1,
    runs: int = 100,
    seed: int = 0,
) -> list[InfluenceReduction]:
    """Influence reduction ``h(v) = N(G) - N(G minus v)`` for every candidate, best first.

    Both estimates use the same run seeds. With counter-based coins a run in
    which ``v`` never adopts M plays out identically once ``v`` is deleted
    (its in-edges all failed and its out-edges were never tried), so only the
    runs where ``v`` was reached are re-simulated. Negative estimates are
    clamped to zero.
    """
    pool = _check_pool(P, None)
    R = list(R)
    seeds = seed + np.arange(runs, dtype=np.int64)
    base = simulate_seeds(graph, R, [], biases, rule, alpha, seeds)
    base_count = (base == M).sum(axis=1)
    out = []
    for v in pool:
        affected = np.flatnonzero(base[:, v] == M)
        if not len(affected):
            out.append((v, 0.0))
            continue
        cut = simulate_seeds(graph.without_node(v), R, [], biases, rule, alpha, seeds[affected])
        delta = float(base_count[affected].sum() - (cut == M).sum())
        out.append((v, max(0.0, delta / runs)))
    return [InfluenceReduction(v, h) for v, h in _top(out, None)]


def tmb_select(graph, R, P, k, biases, rule=LINEAR_HALVING, alpha=1, runs=100, seed=0) -> list[int]:
    _check_pool(P, k)
    return [r.candidate for r in tmb_ranking(graph, R, P, biases, rule, alpha, runs, seed)[:k]]


def vulnerable_set(graph, R, biases, alpha, samples=100, seed=0) -> np.ndarray:
    """Nodes outside ``R`` that adopt M in at least one misinformation-only run."""
    states = simulate_final_states(graph, R, [], biases, LINEAR_HALVING, alpha, samples, seed)
    reached = (states == M).any(axis=0)
    reached[list(R)] = False
    return np.flatnonzero(reached)


def tib_ranking(
    graph: DirectedGraph,
    R: Iterable[int],
    P: Sequence[int],
    biases: BiasTable,
    alpha: int = 1,
    samples: int = 100,
    seed: int = 0,
) -> list[tuple[int, float]]:
    """Mitigation power of every candidate, best first.

    Power of ``w`` is the mean number of vulnerable nodes (other than ``w``)
    that end in state T when ``w`` alone spreads the truth for ``alpha``
    rounds. Only one side is active in either phase, so the bias rule plays no
    part.
    """
    pool = _check_pool(P, None)
    R = list(R)
    target = np.zeros(graph.n, dtype=bool)
    target[vulnerable_set(graph, R, biases, alpha, samples, seed)] = True
    out = []
    for w in pool:
        if graph.out_indptr[w] == graph.out_indptr[w + 1]:
            out.append((w, 0.0))
            continue
        states = simulate_final_states(graph, [], [w], biases, LINEAR_HALVING, alpha, samples, seed)
        mask = target.copy()
        mask[w] = False
        out.append((w, float((states[:, mask] == T).sum()) / samples))
    return _top(out, None)


def tib_select(graph, R, P, k, biases, alpha=1, samples=100, seed=0) -> list[int]:
    _check_pool(P, k)
    return [w for w, _ in tib_ranking(graph, R, P, biases, alpha, samples, seed)[:k]]


def random_select(P: Sequence[int], k: int, seed: int = 0) -> list[int]:
    """Uniform ``k``-subset of the pool, in a seeded random order."""
    pool = _check_pool(P, k)
    rng = np.random.default_rng(seed)
    return [pool[i] for i in rng.permutation(len(pool))[:k]]
