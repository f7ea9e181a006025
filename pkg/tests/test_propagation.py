import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cicmb.propagation import (
    LINEAR_HALVING,
    QUADRATIC,
    BiasTable,
    M,
    N,
    T,
    get_bias_rule,
    monte_carlo_states,
    run_cicmb,
    simulate_final_states,
    write_activation_log,
)

from conftest import cascade_cases, make_graph, random_small_case
from oracles import exact_cicmb, exact_icm


def ones(n):
    return BiasTable.constant(n)


def assert_within_3se(freq, exact, runs):
    freq, exact = np.asarray(freq), np.asarray(exact)
    exact = np.clip(exact, 0.0, 1.0)
    se = np.sqrt(exact * (1 - exact) / runs)
    # degenerate probabilities must be reproduced exactly
    tol = np.where(se > 0, 3 * se, 1e-12)
    bad = np.abs(freq - exact) > tol
    assert not bad.any(), f"MC {freq[bad]} vs exact {exact[bad]} (3se {tol[bad]})"


class TestRunCicmb:
    def test_deterministic_chain(self, chain):
        res = run_cicmb(chain, [0], [], ones(3), "linear", alpha=2, seed=0)
        assert res.final_state.tolist() == [M, M, M]
        assert res.activation_log == [(0, 0, M), (1, 1, M), (2, 2, M)]
        assert res.iterations_run == 2

    def test_deadline_cuts_chain(self, chain):
        res = run_cicmb(chain, [0], [], ones(3), "linear", alpha=1, seed=0)
        assert res.final_state.tolist() == [M, M, N]

    def test_linear_halving_on_adoption(self):
        g = make_graph(2, [(0, 1)])
        b = BiasTable([1.0, 0.6], [0.0, 0.8])
        adopted = [run_cicmb(g, [0], [], b, "linear", 1, s) for s in range(40)]
        adopted = [r for r in adopted if r.final_state[1] == M]
        assert adopted
        for r in adopted:
            assert r.final_biases.bm[1] == pytest.approx(0.6)
            assert r.final_biases.bt[1] == pytest.approx(0.4)

    def test_quadratic_on_adoption(self):
        g = make_graph(2, [(1, 0)])
        b = BiasTable([0.6, 0.0], [0.8, 1.0])
        r = next(r for r in (run_cicmb(g, [], [1], b, "quadratic", 1, s) for s in range(40)) if r.final_state[0] == T)
        assert r.final_biases.bm[0] == pytest.approx(0.36)
        assert r.final_biases.bt[0] == pytest.approx(0.8)

    def test_same_side_hits_update_once(self):
        g = make_graph(3, [(0, 2), (1, 2)])
        r = run_cicmb(g, [0, 1], [], ones(3), "linear", 1, 0)
        assert r.final_state[2] == M
        assert r.final_biases.bt[2] == 0.5

    def test_input_errors(self, chain):
        with pytest.raises(ValueError, match="disjoint"):
            run_cicmb(chain, [0], [0], ones(3), "linear", 1, 0)
        with pytest.raises(ValueError, match="alpha"):
            run_cicmb(chain, [0], [], ones(3), "linear", 0, 0)
        with pytest.raises(ValueError, match="bias"):
            run_cicmb(chain, [0], [], ones(2), "linear", 1, 0)
        with pytest.raises(ValueError):
            get_bias_rule("cubic")

    def test_matches_batch_runs(self):
        rng = np.random.default_rng(5)
        n, edges, R, D, bm, bt, rule, alpha = random_small_case(rng)
        g = make_graph(n, edges)
        b = BiasTable(bm, bt)
        batch = simulate_final_states(g, R, D, b, rule, alpha, runs=30, seed=100)
        for i in range(30):
            assert np.array_equal(run_cicmb(g, R, D, b, rule, alpha, 100 + i).final_state, batch[i])


class TestExactEquivalence:
    def test_tie_break_is_fair(self):
        g = make_graph(3, [(0, 1), (2, 1)])
        freq = monte_carlo_states(g, [0], [2], ones(3), "linear", alpha=1, runs=10_000, seed=9)
        assert abs(freq[1, M] - 0.5) <= 0.02
        assert freq[1, M] + freq[1, T] == 1.0
        exact = exact_cicmb(3, [(0, 1, 1.0), (2, 1, 1.0)], [0], [2], [1] * 3, [1] * 3, "linear", 1)
        assert exact[1][M] == pytest.approx(0.5)

    def test_counter_conversion(self):
        # 1 adopts M at round 1 (bt halves to 0.5); 3 adopts T at round 1 and converts 1 with prob 0.5
        edges = [(0, 1, 1.0), (2, 3, 1.0), (3, 1, 1.0)]
        g = make_graph(4, edges)
        exact = exact_cicmb(4, edges, [0], [2], [1] * 4, [1] * 4, "linear", 3)
        assert exact[1][T] == pytest.approx(0.5)
        freq = monte_carlo_states(g, [0], [2], ones(4), "linear", 3, runs=20_000, seed=3)
        assert_within_3se(freq, exact, 20_000)

    @pytest.mark.parametrize("case_seed", range(6))
    def test_four_node_graphs(self, case_seed):
        rng = np.random.default_rng(1000 + case_seed)
        n, edges, R, D, bm, bt, rule, alpha = random_small_case(rng, max_edges=6, max_nodes=4)
        runs = 40_000
        freq = monte_carlo_states(make_graph(n, edges), R, D, BiasTable(bm, bt), rule, alpha, runs, seed=case_seed)
        assert_within_3se(freq, exact_cicmb(n, edges, R, D, bm, bt, rule, alpha), runs)

    @pytest.mark.parametrize("case_seed", range(5))
    def test_misinformation_only_is_classic_icm(self, case_seed):
        rng = np.random.default_rng(2000 + case_seed)
        n, edges, R, _, _, bt, _, alpha = random_small_case(rng, max_edges=8)
        icm = exact_icm(n, edges, R, alpha)
        exact = exact_cicmb(n, edges, R, [], [1.0] * n, bt, "linear", alpha)
        assert [d[M] for d in exact] == pytest.approx(icm, abs=1e-12)
        runs = 40_000
        freq = monte_carlo_states(make_graph(n, edges), R, [], BiasTable(np.ones(n), bt), "linear", alpha, runs, 7)
        assert_within_3se(freq[:, M], icm, runs)


class TestMonteCarlo:
    def test_chain_always_reaches_end(self, chain):
        freq = monte_carlo_states(chain, [0], [], ones(3), "linear", 2, runs=100, seed=1)
        assert freq[2, M] == 1.0

    def test_single_run_is_indicator(self):
        rng = np.random.default_rng(3)
        n, edges, R, D, bm, bt, rule, alpha = random_small_case(rng)
        freq = monte_carlo_states(make_graph(n, edges), R, D, BiasTable(bm, bt), rule, alpha, runs=1, seed=4)
        assert set(np.unique(freq)) <= {0.0, 1.0}
        assert np.allclose(freq.sum(axis=1), 1.0)

    def test_runs_must_be_positive(self, chain):
        with pytest.raises(ValueError):
            monte_carlo_states(chain, [0], [], ones(3), "linear", 1, runs=0)

    def test_input_biases_not_mutated(self, chain):
        b = ones(3)
        monte_carlo_states(chain, [0], [], b, "linear", 2, runs=10)
        assert b.bt.tolist() == [1.0, 1.0, 1.0]

    def test_chunking_does_not_change_results(self, monkeypatch):
        import cicmb.propagation as prop

        rng = np.random.default_rng(8)
        n, edges, R, D, bm, bt, rule, alpha = random_small_case(rng)
        g, b = make_graph(n, edges), BiasTable(bm, bt)
        whole = simulate_final_states(g, R, D, b, rule, alpha, 50, 2)
        monkeypatch.setattr(prop, "_chunk_size", lambda n, budget=0: 7)
        assert np.array_equal(simulate_final_states(g, R, D, b, rule, alpha, 50, 2), whole)


class TestProperties:
    @settings(max_examples=120, deadline=None)
    @given(cascade_cases())
    def test_cascade_invariants(self, case):
        g, R, D, b, rule, alpha, seed = case
        res = run_cicmb(g, R, D, b, rule, alpha, seed)
        n = g.n
        # seeds are fixed points
        assert all(res.final_state[r] == M for r in R)
        assert all(res.final_state[d] == T for d in D)
        # log: ordered, seeds only at t=0, replay reproduces final state
        times = [t for t, _, _ in res.activation_log]
        assert times == sorted(times)
        seeds = set(R) | set(D)
        assert all(t == 0 for t, v, _ in res.activation_log if v in seeds)
        assert all(st != N for _, _, st in res.activation_log)
        assert np.array_equal(res.states_at(alpha), res.final_state)
        for t in range(alpha + 1):
            s = res.states_at(t)
            assert sum(int((s == x).sum()) for x in (N, M, T)) == n
        assert res.iterations_run <= alpha
        # biases stay in [0, 1] and never increase round to round
        for (bm0, bt0), (bm1, bt1) in zip(res.bias_trace, res.bias_trace[1:]):
            assert np.all(bm1 <= bm0) and np.all(bt1 <= bt0)
        fb = res.final_biases
        assert np.all((fb.bm >= 0) & (fb.bm <= 1) & (fb.bt >= 0) & (fb.bt <= 1))
        # determinism
        again = run_cicmb(g, R, D, b, rule, alpha, seed)
        assert again.activation_log == res.activation_log

    @settings(max_examples=60, deadline=None)
    @given(cascade_cases())
    def test_early_stop_is_harmless(self, case):
        g, R, D, b, rule, alpha, seed = case
        res = run_cicmb(g, R, D, b, rule, alpha, seed)
        if res.iterations_run < alpha:
            longer = run_cicmb(g, R, D, b, rule, alpha + 5, seed)
            assert np.array_equal(longer.final_state, res.final_state)

    @given(st.floats(0.0, 1.0))
    def test_rules_never_increase_bias(self, x):
        arr = np.array([x])
        assert LINEAR_HALVING(arr)[0] <= x
        assert QUADRATIC(arr)[0] <= x
        assert QUADRATIC(arr)[0] >= 0.0


def test_activation_log_dump(chain):
    res = run_cicmb(chain, [0], [], ones(3), "linear", 2, 0)
    buf = io.StringIO()
    write_activation_log([res, res], buf)
    lines = buf.getvalue().splitlines()
    assert lines[:3] == ["0,0,0,M", "0,1,1,M", "0,2,2,M"]
    assert lines[3].startswith("1,")
