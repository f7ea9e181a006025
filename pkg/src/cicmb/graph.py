"""Directed graph storage, edge-list ingestion, DAG reduction and diameter."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Callable, Iterator, TextIO, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

EdgeSource = Union[str, "os.PathLike[str]", BinaryIO, TextIO]


class EdgeListParseError(ValueError):
    """Raised for a malformed data line in an edge-list file."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Simple directed graph on dense ids ``0..n-1`` with one probability per edge.

    Edges are stored sorted by ``(src, dst)`` so the out-neighbours of ``u`` are
    ``dst[out_indptr[u]:out_indptr[u + 1]]`` in ascending order. ``in_order``
    lists edge indices sorted by ``(dst, src)``, sliced by ``in_indptr``.
    Instances are treated as immutable; all arrays are read-only.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    original_ids: np.ndarray
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0
    out_indptr: np.ndarray = field(init=False, repr=False)
    in_indptr: np.ndarray = field(init=False, repr=False)
    in_order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        setattr_ = object.__setattr__
        for name in ("src", "dst", "original_ids"):
            setattr_(self, name, _frozen(np.asarray(getattr(self, name), dtype=np.int64)))
        setattr_(self, "prob", _frozen(np.asarray(self.prob, dtype=np.float64)))
        m = len(self.src)
        if len(self.dst) != m or len(self.prob) != m:
            raise ValueError("src, dst and prob must have equal length")
        if len(self.original_ids) != self.n:
            raise ValueError("original_ids must have one entry per node")
        if m:
            if self.src.min() < 0 or self.dst.min() < 0 or max(self.src.max(), self.dst.max()) >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(self.src == self.dst):
                raise ValueError("self-loops are not allowed")
            key = self.src * self.n + self.dst
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted by (src, dst) without duplicates")
            if np.any(~(self.prob > 0.0)) or np.any(self.prob > 1.0):
                raise ValueError("edge probabilities must lie in (0, 1]")
        out_counts = np.bincount(self.src, minlength=self.n)
        in_counts = np.bincount(self.dst, minlength=self.n)
        setattr_(self, "out_indptr", _frozen(np.concatenate(([0], np.cumsum(out_counts)))))
        setattr_(self, "in_indptr", _frozen(np.concatenate(([0], np.cumsum(in_counts)))))
        setattr_(self, "in_order", _frozen(np.lexsort((self.src, self.dst))))

    @classmethod
    def from_edges(
        cls,
        n: int,
        src,
        dst,
        prob=None,
        original_ids=None,
    ) -> "DirectedGraph":
        """Build a graph from raw endpoint arrays.

        Self-loops are dropped, and for repeated ``(src, dst)`` pairs the first
        occurrence (and its probability) is kept. Missing probabilities default
        to 1.
        """
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        prob = np.ones(len(src)) if prob is None else np.asarray(prob, dtype=np.float64).reshape(-1)
        if original_ids is None:
            original_ids = np.arange(n, dtype=np.int64)
        loops = src == dst
        n_loops = int(loops.sum())
        src, dst, prob = src[~loops], dst[~loops], prob[~loops]
        key = src * max(n, 1) + dst
        _, first = np.unique(key, return_index=True)
        n_dups = len(key) - len(first)
        # np.unique returns first occurrences in key order, i.e. sorted by (src, dst)
        return cls(
            n=n,
            src=src[first],
            dst=dst[first],
            prob=prob[first],
            original_ids=original_ids,
            self_loops_dropped=n_loops,
            duplicates_dropped=n_dups,
        )

    @property
    def m(self) -> int:
        return len(self.src)

    def out_edges(self, u: int) -> range:
        return range(int(self.out_indptr[u]), int(self.out_indptr[u + 1]))

    def out_neighbors(self, u: int) -> np.ndarray:
        return self.dst[self.out_indptr[u]:self.out_indptr[u + 1]]

    def in_edges(self, u: int) -> np.ndarray:
        return self.in_order[self.in_indptr[u]:self.in_indptr[u + 1]]

    def in_neighbors(self, u: int) -> np.ndarray:
        return self.src[self.in_edges(u)]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for s, d, p in zip(self.src.tolist(), self.dst.tolist(), self.prob.tolist()):
            yield s, d, p

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def edge_index(self, u: int, v: int) -> int:
        lo, hi = int(self.out_indptr[u]), int(self.out_indptr[u + 1])
        i = lo + int(np.searchsorted(self.dst[lo:hi], v))
        if i >= hi or self.dst[i] != v:
            raise KeyError((u, v))
        return i

    def with_probabilities(self, prob) -> "DirectedGraph":
        return DirectedGraph(
            n=self.n,
            src=self.src,
            dst=self.dst,
            prob=prob,
            original_ids=self.original_ids,
            self_loops_dropped=self.self_loops_dropped,
            duplicates_dropped=self.duplicates_dropped,
        )

    def without_node(self, v: int) -> "DirectedGraph":
        """Copy with every edge incident to ``v`` removed.

        ``v`` stays behind as an isolated id so that node ids (and anything keyed
        on them, such as simulation coins) remain aligned with the original.
        """
        keep = (self.src != v) & (self.dst != v)
        return DirectedGraph(
            n=self.n,
            src=self.src[keep],
            dst=self.dst[keep],
            prob=self.prob[keep],
            original_ids=self.original_ids,
        )

    def to_scipy(self, undirected: bool = False) -> sparse.csr_matrix:
        data = np.ones(self.m, dtype=np.int8)
        a = sparse.csr_matrix((data, (self.src, self.dst)), shape=(self.n, self.n))
        if undirected:
            a = ((a + a.T) > 0).astype(np.int8).tocsr()
        return a


@dataclass(frozen=True, eq=False)
class Dag(DirectedGraph):
    """A cycle-free reduction of a graph; ``removed_edges`` holds the dropped (src, dst) pairs."""

    removed_edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        super().__post_init__()
        removed = np.asarray(self.removed_edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "removed_edges", _frozen(removed))


def _open_lines(source: EdgeSource) -> tuple[TextIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8"), False


def load_edge_list(source: EdgeSource, directed: bool = True) -> DirectedGraph:
    """Read a whitespace-separated ``src dst`` edge list.

    Lines starting with ``#`` or ``%`` and blank lines are skipped; tokens past
    the second on a line are ignored. Original ids are remapped to dense ids in
    ascending order of the original integer value and kept in
    ``graph.original_ids``. If ``directed`` is false every line adds both
    directions. Probabilities default to 1 until assigned.
    """
    fh, owned = _open_lines(source)
    srcs: list[int] = []
    dsts: list[int] = []
    try:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s[0] in "#%":
                continue
            tok = s.split()
            if len(tok) < 2:
                raise EdgeListParseError(lineno, f"expected two node ids, got {len(tok)} token(s)")
            try:
                u, v = int(tok[0]), int(tok[1])
            except ValueError:
                raise EdgeListParseError(lineno, f"non-integer node id in {s!r}") from None
            srcs.append(u)
            dsts.append(v)
    finally:
        if owned:
            fh.close()
        elif isinstance(fh, io.TextIOWrapper) and not isinstance(source, io.TextIOBase):
            fh.detach()

    raw = np.array(srcs + dsts, dtype=np.int64)
    ids, dense = np.unique(raw, return_inverse=True)
    m = len(srcs)
    src, dst = dense[:m], dense[m:]
    if not directed:
        src, dst = np.concatenate((src, dst)), np.concatenate((dst, src))
        # interleave so line i yields (u,v) then (v,u) for first-occurrence purposes
        order = np.arange(2 * m).reshape(2, m).T.reshape(-1)
        src, dst = src[order], dst[order]
    return DirectedGraph.from_edges(len(ids), src, dst, original_ids=ids)


def write_edge_list(graph: DirectedGraph, stream: TextIO, original_ids: bool = False) -> None:
    ids = graph.original_ids if original_ids else np.arange(graph.n)
    for s, d, _ in graph.edges():
        stream.write(f"{ids[s]} {ids[d]}\n")


def assign_edge_probabilities(graph: DirectedGraph, seed) -> DirectedGraph:
    """Draw every edge probability uniformly from (0, 1]."""
    rng = np.random.default_rng(seed)
    # 1 - U[0,1) lies in (0,1]
    return graph.with_probabilities(1.0 - rng.random(graph.m))


def _dfs_back_edges(graph: DirectedGraph) -> np.ndarray:
    """Boolean mask of back edges found by DFS from every node in ascending id order."""
    n = graph.n
    indptr = graph.out_indptr.tolist()
    dst = graph.dst.tolist()
    color = [0] * n  # 0 unvisited, 1 on stack, 2 finished
    back = np.zeros(graph.m, dtype=bool)
    for root in range(n):
        if color[root]:
            continue
        color[root] = 1
        stack = [root]
        cursor = [indptr[root]]
        while stack:
            u = stack[-1]
            e = cursor[-1]
            if e == indptr[u + 1]:
                color[u] = 2
                stack.pop()
                cursor.pop()
                continue
            cursor[-1] = e + 1
            v = dst[e]
            c = color[v]
            if c == 1:
                back[e] = True
            elif c == 0:
                color[v] = 1
                stack.append(v)
                cursor.append(indptr[v])
    return back


def _greedy_fas_edges(graph: DirectedGraph) -> np.ndarray:
    """Eades-Lin-Smyth greedy feedback arc set; ties broken by lowest id.

    Nodes are peeled into a linear order (sinks to the back, sources to the
    front, otherwise the node with the largest out-degree minus in-degree to
    the front); edges pointing backwards in that order are dropped.
    """
    import heapq

    n = graph.n
    outs = [set(graph.out_neighbors(u).tolist()) for u in range(n)]
    ins = [set(graph.in_neighbors(u).tolist()) for u in range(n)]
    alive = [True] * n
    front: list[int] = []
    back: list[int] = []
    heap = [(-(len(outs[u]) - len(ins[u])), u) for u in range(n)]
    heapq.heapify(heap)
    sinks = [u for u in range(n) if not outs[u]]
    sources = [u for u in range(n) if not ins[u] and outs[u]]
    remaining = n

    def drop(u):
        nonlocal remaining
        alive[u] = False
        remaining -= 1
        for v in outs[u]:
            ins[v].discard(u)
            if alive[v]:
                if not ins[v] and outs[v]:
                    sources.append(v)
                heapq.heappush(heap, (-(len(outs[v]) - len(ins[v])), v))
        for v in ins[u]:
            outs[v].discard(u)
            if alive[v]:
                if not outs[v]:
                    sinks.append(v)
                heapq.heappush(heap, (-(len(outs[v]) - len(ins[v])), v))

    while remaining:
        while sinks:
            u = sinks.pop()
            if alive[u] and not outs[u]:
                back.append(u)
                drop(u)
        while sources:
            u = sources.pop()
            if alive[u] and not ins[u]:
                front.append(u)
                drop(u)
        if not remaining:
            break
        while heap:
            key, u = heapq.heappop(heap)
            if alive[u] and key == -(len(outs[u]) - len(ins[u])):
                front.append(u)
                drop(u)
                break
    position = np.empty(n, dtype=np.int64)
    position[np.array(front + back[::-1], dtype=np.int64)] = np.arange(n)
    return position[graph.src] > position[graph.dst]


DAG_STRATEGIES: dict[str, Callable[[DirectedGraph], np.ndarray]] = {
    "dfs": _dfs_back_edges,
    "greedy-fas": _greedy_fas_edges,
}


def build_dag(graph: DirectedGraph, strategy: str = "dfs") -> Dag:
    """Remove cycles by deleting the edges selected by ``strategy``.

    The default ``"dfs"`` strategy deletes every edge that points at a node on
    the current DFS stack, with roots and neighbours visited in ascending id
    order, so the result is deterministic for a given graph.
    """
    try:
        find = DAG_STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown DAG strategy {strategy!r}") from None
    drop = find(graph)
    keep = ~drop
    return Dag(
        n=graph.n,
        src=graph.src[keep],
        dst=graph.dst[keep],
        prob=graph.prob[keep],
        original_ids=graph.original_ids,
        removed_edges=np.column_stack((graph.src[drop], graph.dst[drop])),
    )


def topological_order(graph: DirectedGraph) -> list[int]:
    """Kahn's algorithm; raises ValueError if the graph has a directed cycle."""
    indeg = np.bincount(graph.dst, minlength=graph.n).tolist()
    indptr = graph.out_indptr.tolist()
    dst = graph.dst.tolist()
    ready = [u for u in range(graph.n) if indeg[u] == 0]
    order = []
    while ready:
        u = ready.pop()
        order.append(u)
        for e in range(indptr[u], indptr[u + 1]):
            v = dst[e]
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != graph.n:
        raise ValueError("graph contains a directed cycle")
    return order


def _bfs_dist(adj: sparse.csr_matrix, sources) -> np.ndarray:
    return csgraph.shortest_path(adj, method="D", directed=False, unweighted=True, indices=sources)


def undirected_diameter(
    graph: DirectedGraph,
    exact_threshold: int = 10_000,
    sweeps: int = 20,
    seed=0,
    chunk: int = 256,
) -> int:
    """Diameter of the largest connected component of the undirected projection.

    Exact (maximum BFS eccentricity over every node) when the component has at
    most ``exact_threshold`` nodes; otherwise a lower bound from ``sweeps``
    double-sweep BFS passes, the first started from a maximum-degree node and
    the rest from random nodes.
    """
    if graph.n == 0:
        raise ValueError("diameter of an empty graph is undefined")
    adj = graph.to_scipy(undirected=True)
    _, labels = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    comp = np.flatnonzero(labels == np.argmax(sizes))
    if len(comp) == 1:
        return 0
    sub = adj[comp][:, comp].tocsr()
    k = len(comp)
    if k <= exact_threshold:
        best = 0.0
        for lo in range(0, k, chunk):
            d = _bfs_dist(sub, np.arange(lo, min(lo + chunk, k)))
            best = max(best, float(d.max()))
        return int(best)

    rng = np.random.default_rng(seed)
    deg = np.diff(sub.indptr)
    best = 0
    start = int(np.argmax(deg))
    for i in range(max(sweeps, 1)):
        if i:
            start = int(rng.integers(k))
        far = int(np.argmax(_bfs_dist(sub, [start])[0]))
        d = _bfs_dist(sub, [far])[0]
        best = max(best, int(d.max()))
    return best


def summary_record(graph: DirectedGraph, diameter: int) -> str:
    return (
        f"nodes={graph.n} edges={graph.m} diameter={diameter} "
        f"self_loops_dropped={graph.self_loops_dropped} duplicates_dropped={graph.duplicates_dropped}"
    )
