"""Competitive independent cascade with evolving user bias (CICMB).

Every random decision is a counter-based coin keyed on
``(run seed, round, edge or node, purpose)``. Two simulations that share a run
seed therefore see the same coin for the same attempt, which is what makes
paired with/without-campaign comparisons low variance, and a batch of runs can
be advanced together with numpy instead of one cascade at a time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .graph import DirectedGraph


class NodeState(IntEnum):
    N = 0
    M = 1
    T = 2


N, M, T = int(NodeState.N), int(NodeState.M), int(NodeState.T)
STATE_LETTERS = "NMT"


@dataclass
class BiasTable:
    """Per-node bias towards misinformation (``bm``) and truth (``bt``)."""

    bm: np.ndarray
    bt: np.ndarray

    def __post_init__(self):
        self.bm = np.array(self.bm, dtype=np.float64)
        self.bt = np.array(self.bt, dtype=np.float64)
        if self.bm.shape != self.bt.shape or self.bm.ndim != 1:
            raise ValueError("bm and bt must be 1-d arrays of equal length")
        if np.any((self.bm < 0) | (self.bm > 1)) or np.any((self.bt < 0) | (self.bt > 1)):
            raise ValueError("bias values must lie in [0, 1]")

    @classmethod
    def constant(cls, n: int, bm: float = 1.0, bt: float = 1.0) -> "BiasTable":
        return cls(np.full(n, bm), np.full(n, bt))

    def __len__(self) -> int:
        return len(self.bm)

    def copy(self) -> "BiasTable":
        return BiasTable(self.bm.copy(), self.bt.copy())


@dataclass(frozen=True)
class BiasUpdateRule:
    """How the opposing bias shrinks when a node adopts a side.

    ``fn`` is applied to the bias for the side *not* adopted; the adopted
    side's bias is left alone.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.fn(x)


LINEAR_HALVING = BiasUpdateRule("linear-halving", lambda x: x / 2.0)
QUADRATIC = BiasUpdateRule("quadratic", lambda x: x * x)

BIAS_RULES = {
    "linear-halving": LINEAR_HALVING,
    "linear": LINEAR_HALVING,
    "quadratic": QUADRATIC,
    "square": QUADRATIC,
}


def get_bias_rule(rule) -> BiasUpdateRule:
    if isinstance(rule, BiasUpdateRule):
        return rule
    try:
        return BIAS_RULES[rule]
    except KeyError:
        raise ValueError(f"unknown bias rule {rule!r}; choose from {sorted(BIAS_RULES)}") from None


@dataclass
class CascadeResult:
    final_state: np.ndarray
    activation_log: list[tuple[int, int, int]]
    iterations_run: int
    final_biases: BiasTable
    # (bm, bt) at the start of every executed round plus the final table
    bias_trace: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)

    def states_at(self, t: int) -> np.ndarray:
        """Node states after round ``t``, replayed from the activation log."""
        s = np.zeros(len(self.final_state), dtype=np.int8)
        for ts, node, st in self.activation_log:
            if ts > t:
                break
            s[node] = st
        return s


# --- counter-based coins ---------------------------------------------------

_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_K_KEY = np.uint64(0x9E3779B97F4A7C15)
_K_ROUND = np.uint64(0xD1B54A32D192ED03)
_K_STREAM = np.uint64(0x8CB92BA72F3D8DD7)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)

STREAM_M, STREAM_T, STREAM_TIE = 1, 2, 3


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


def run_keys(seeds) -> np.ndarray:
    """Hash integer run seeds into 64-bit stream keys."""
    s = np.atleast_1d(np.asarray(seeds, dtype=np.int64)).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _mix(s * _K_KEY + _K_STREAM)


def coins(keys: np.ndarray, t: int, item: np.ndarray, stream) -> np.ndarray:
    """Uniform [0, 1) draws, one per element of the broadcast of ``keys``/``item``/``stream``."""
    item = np.asarray(item, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    with np.errstate(over="ignore"):
        inner = item * _K_KEY + stream * _K_STREAM + np.uint64(t) * _K_ROUND
        h = _mix(np.asarray(keys, dtype=np.uint64) ^ _mix(inner))
    return (h >> _S11).astype(np.float64) * (1.0 / 9007199254740992.0)


# --- simulation core --------------------------------------------------------


def _as_nodes(nodes, n: int) -> np.ndarray:
    arr = np.unique(np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64))
    if len(arr) and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError("seed node id out of range")
    return arr


def _check_inputs(graph, R, D, biases, alpha):
    R = _as_nodes(R, graph.n)
    D = _as_nodes(D, graph.n)
    if np.intersect1d(R, D).size:
        raise ValueError("misinformation and truth seed sets must be disjoint")
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    if len(biases) < graph.n:
        raise ValueError(f"bias table covers {len(biases)} nodes but graph has {graph.n}")
    return R, D


def _simulate_batch(
    graph: DirectedGraph,
    R: np.ndarray,
    D: np.ndarray,
    biases: BiasTable,
    rule: BiasUpdateRule,
    alpha: int,
    seeds: np.ndarray,
    record: bool = False,
):
    B, n = len(seeds), graph.n
    keys = run_keys(seeds)
    state = np.zeros((B, n), dtype=np.int8)
    state[:, R] = M
    state[:, D] = T
    stubborn = np.zeros(n, dtype=bool)
    stubborn[R] = True
    stubborn[D] = True
    bm = np.tile(biases.bm[:n], (B, 1))
    bt = np.tile(biases.bt[:n], (B, 1))
    frontier = np.zeros((B, n), dtype=bool)
    frontier[:, R] = True
    frontier[:, D] = True
    rounds = np.zeros(B, dtype=np.int64)

    indptr, dst, prob = graph.out_indptr, graph.dst, graph.prob
    deg = np.diff(indptr)
    edge_key = graph.src.astype(np.uint64) * np.uint64(n) + dst.astype(np.uint64)

    log: list[tuple[int, int, int]] = []
    trace = []
    if record:
        log.extend((0, int(v), M) for v in R)
        log.extend((0, int(v), T) for v in D)
        log.sort()

    for t in range(1, alpha + 1):
        active = frontier.any(axis=1)
        if not active.any():
            break
        rounds += active
        if record:
            trace.append((bm[0].copy(), bt[0].copy()))
        fr_run, fr_node = np.nonzero(frontier)
        counts = deg[fr_node]
        total = int(counts.sum())
        if total == 0:
            break
        run_e = np.repeat(fr_run, counts)
        first = np.repeat(indptr[fr_node] - (np.cumsum(counts) - counts), counts)
        e = first + np.arange(total)
        v = dst[e]
        camp = np.repeat(state[fr_run, fr_node], counts)

        ok = (state[run_e, v] != camp) & ~stubborn[v]
        run_e, e, v, camp = run_e[ok], e[ok], v[ok], camp[ok]
        is_m = camp == M
        p = prob[e] * np.where(is_m, bm[run_e, v], bt[run_e, v])
        hit = coins(keys[run_e], t, edge_key[e], np.where(is_m, STREAM_M, STREAM_T)) < p

        hit_m = np.zeros((B, n), dtype=bool)
        hit_t = np.zeros((B, n), dtype=bool)
        sel = hit & is_m
        hit_m[run_e[sel], v[sel]] = True
        sel = hit & ~is_m
        hit_t[run_e[sel], v[sel]] = True

        both = hit_m & hit_t
        if both.any():
            rb, vb = np.nonzero(both)
            m_wins = coins(keys[rb], t, vb, STREAM_TIE) < 0.5
            hit_t[rb[m_wins], vb[m_wins]] = False
            hit_m[rb[~m_wins], vb[~m_wins]] = False

        state[hit_m] = M
        bt[hit_m] = rule(bt[hit_m])
        state[hit_t] = T
        bm[hit_t] = rule(bm[hit_t])
        frontier = hit_m | hit_t

        if record:
            changed = np.flatnonzero(frontier[0])
            log.extend((t, int(u), int(state[0, u])) for u in changed)

    if record:
        trace.append((bm[0].copy(), bt[0].copy()))
    return state, rounds, bm, bt, log, trace


def run_cicmb(
    graph: DirectedGraph,
    R: Iterable[int],
    D: Iterable[int],
    biases: BiasTable,
    rule="linear-halving",
    alpha: int = 1,
    seed: int = 0,
) -> CascadeResult:
    """Run one CICMB cascade for at most ``alpha`` synchronous rounds.

    Seeds in ``R`` hold state M and seeds in ``D`` hold state T for the whole
    run. In each round every node that changed state in the previous round
    (seeds count as changed at round 0) tries each out-neighbour once, with
    success probability ``P(u, v)`` times the target's current bias for the
    attacker's side; targets already on that side are skipped. Non-seed nodes
    may switch sides. A target hit by both sides in the same round picks one
    by a fair coin. Each adoption shrinks the bias for the other side via
    ``rule``; biases read during a round are those at the start of the round.
    """
    rule = get_bias_rule(rule)
    R, D = _check_inputs(graph, R, D, biases, alpha)
    state, rounds, bm, bt, log, trace = _simulate_batch(
        graph, R, D, biases, rule, alpha, np.array([seed]), record=True
    )
    return CascadeResult(
        final_state=state[0],
        activation_log=log,
        iterations_run=int(rounds[0]),
        final_biases=BiasTable(bm[0], bt[0]),
        bias_trace=trace,
    )


def _chunk_size(n: int, budget: int = 4_000_000) -> int:
    return max(1, budget // max(n, 1))


def simulate_final_states(
    graph: DirectedGraph,
    R: Iterable[int],
    D: Iterable[int],
    biases: BiasTable,
    rule="linear-halving",
    alpha: int = 1,
    runs: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Final states of ``runs`` cascades as a ``(runs, n)`` int8 array.

    Run ``i`` uses seed ``seed + i`` and matches ``run_cicmb(..., seed=seed + i)``.
    Every run starts from its own copy of ``biases``.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    return simulate_seeds(graph, R, D, biases, rule, alpha, seed + np.arange(runs, dtype=np.int64))


def simulate_seeds(graph, R, D, biases, rule, alpha, seeds) -> np.ndarray:
    """Like :func:`simulate_final_states` but for an explicit array of run seeds."""
    rule = get_bias_rule(rule)
    R, D = _check_inputs(graph, R, D, biases, alpha)
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1)
    runs = len(seeds)
    step = _chunk_size(graph.n)
    out = np.empty((runs, graph.n), dtype=np.int8)
    for lo in range(0, runs, step):
        chunk = seeds[lo:lo + step]
        out[lo:lo + len(chunk)] = _simulate_batch(graph, R, D, biases, rule, alpha, chunk)[0]
    return out


def monte_carlo_states(
    graph: DirectedGraph,
    R: Iterable[int],
    D: Iterable[int],
    biases: BiasTable,
    rule="linear-halving",
    alpha: int = 1,
    runs: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Empirical final-state frequencies, shape ``(n, 3)`` with columns N, M, T."""
    states = simulate_final_states(graph, R, D, biases, rule, alpha, runs, seed)
    freq = np.stack([(states == s).sum(axis=0) for s in (N, M, T)], axis=1)
    return freq / runs


def write_activation_log(results: Sequence[CascadeResult], stream: TextIO, original_ids=None) -> None:
    """Dump ``run_id,timestamp,node,state`` records, one per adoption."""
    for run_id, res in enumerate(results):
        for t, node, st in res.activation_log:
            label = node if original_ids is None else int(original_ids[node])
            stream.write(f"{run_id},{t},{label},{STATE_LETTERS[st]}\n")
