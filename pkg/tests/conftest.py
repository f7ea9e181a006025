from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from cicmb.graph import DirectedGraph  # noqa: E402
from cicmb.propagation import BiasTable  # noqa: E402

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def make_graph(n, edges):
    """Graph from ``(u, v)`` or ``(u, v, p)`` tuples."""
    if not edges:
        return DirectedGraph.from_edges(n, [], [])
    src = [e[0] for e in edges]
    dst = [e[1] for e in edges]
    prob = [e[2] if len(e) > 2 else 1.0 for e in edges]
    return DirectedGraph.from_edges(n, src, dst, prob)


def random_small_case(rng: np.random.Generator, max_edges=8, max_nodes=6):
    """Random tiny CICMB instance: graph, seed sets, biases, rule, alpha."""
    n = int(rng.integers(3, max_nodes + 1))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    m = int(rng.integers(2, min(max_edges, len(pairs)) + 1))
    chosen = [pairs[i] for i in rng.choice(len(pairs), size=m, replace=False)]
    edges = [(u, v, float(rng.uniform(0.2, 1.0))) for u, v in chosen]
    nodes = rng.permutation(n)
    r = int(rng.integers(1, 3))
    d = int(rng.integers(0, 3))
    R = sorted(nodes[:r].tolist())
    D = sorted(nodes[r:r + d].tolist())
    bm = rng.uniform(0.1, 1.0, n)
    bt = rng.uniform(0.1, 1.0, n)
    rule = "linear" if rng.random() < 0.5 else "quadratic"
    alpha = int(rng.integers(1, 4))
    return n, edges, R, D, bm, bt, rule, alpha


@st.composite
def digraphs(draw, max_nodes=12, max_edges=30, with_prob=True):
    n = draw(st.integers(1, max_nodes))
    pair = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    raw = draw(st.lists(pair, max_size=max_edges))
    probs = draw(st.lists(st.floats(0.05, 1.0), min_size=len(raw), max_size=len(raw)))
    edges = [(u, v, p if with_prob else 1.0) for (u, v), p in zip(raw, probs)]
    return make_graph(n, edges)


@st.composite
def cascade_cases(draw, max_nodes=10):
    g = draw(digraphs(max_nodes=max_nodes))
    nodes = draw(st.permutations(range(g.n)))
    r = draw(st.integers(0, min(3, g.n)))
    d = draw(st.integers(0, min(3, g.n - r)))
    bm = draw(st.lists(st.floats(0.0, 1.0), min_size=g.n, max_size=g.n))
    bt = draw(st.lists(st.floats(0.0, 1.0), min_size=g.n, max_size=g.n))
    rule = draw(st.sampled_from(["linear", "quadratic"]))
    alpha = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2**31 - 1))
    return g, list(nodes[:r]), list(nodes[r:r + d]), BiasTable(bm, bt), rule, alpha, seed


@pytest.fixture
def chain():
    return make_graph(3, [(0, 1), (1, 2)])


def pytest_terminal_summary(terminalreporter):
    lines = sys.modules[__name__].ACCEPTANCE_LINES
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
