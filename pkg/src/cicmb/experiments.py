"""Experiment protocol: seed sets, bias assignment, percent-saved evaluation and sweeps."""
from __future__ import annotations

import dataclasses
import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .baselines import random_select, tib_ranking, tmb_ranking
from .graph import DAG_STRATEGIES, Dag, DirectedGraph, assign_edge_probabilities, build_dag, load_edge_list, undirected_diameter
from .propagation import M, T, BiasTable, get_bias_rule, simulate_final_states
from .truthscore import DEFAULT_THETA, truthscore_ranking

SELECTORS = ("ktruthscore", "tmb", "tib", "random")
SWEEP_PARAMS = ("k", "rumor_count", "alpha", "bias_rule", "selector")
CSV_HEADER = "selector,sweep_param,sweep_value,resample,saved_pct,reduction_pct,mean_S,mean_IT,stddev_saved,runtime_ms"

# purpose tags for derived seeds
_PROBS, _SEEDSETS, _BIASES, _SELECT, _EVAL = range(5)


def derive_seed(master: int, *keys: int) -> int:
    """Independent 32-bit seed for a (master seed, coordinates...) tuple."""
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


def assign_biases(graph: DirectedGraph, R: Iterable[int], P: Iterable[int], seed) -> BiasTable:
    """Initial biases: rumor starters lean to M, candidates lean to T, the rest are uniform.

    For ``r`` in ``R``: ``bm ~ U[0.7, 1]`` and ``bt = 1 - bm``. For ``p`` in
    ``P`` the roles swap. Every other node draws ``bm`` and ``bt``
    independently from ``U(0, 1]``.
    """
    R = np.asarray(sorted(set(R)), dtype=np.int64)
    P = np.asarray(sorted(set(P)), dtype=np.int64)
    if np.intersect1d(R, P).size:
        raise ValueError("rumor starters and prospective campaigners overlap")
    rng = np.random.default_rng(seed)
    n = graph.n
    bm = 1.0 - rng.random(n)
    bt = 1.0 - rng.random(n)
    strong = 0.7 + 0.3 * rng.random(n)
    bm[R] = strong[R]
    bt[R] = 1.0 - strong[R]
    bt[P] = strong[P]
    bm[P] = 1.0 - strong[P]
    return BiasTable(bm, bt)


def pick_seed_sets(graph: DirectedGraph, rumor_count: int, prospect_count: int, seed) -> tuple[list[int], list[int]]:
    """Draw ``R`` uniformly from V, then ``P`` uniformly from V minus R. Both returned sorted."""
    if rumor_count < 0 or prospect_count < 0:
        raise ValueError("set sizes must be non-negative")
    if rumor_count + prospect_count > graph.n:
        raise ValueError(f"need {rumor_count}+{prospect_count} nodes but graph has {graph.n}")
    rng = np.random.default_rng(seed)
    R = rng.choice(graph.n, size=rumor_count, replace=False)
    rest = np.setdiff1d(np.arange(graph.n), R)
    P = rng.choice(rest, size=prospect_count, replace=False)
    return sorted(R.tolist()), sorted(P.tolist())


@dataclass
class SavedStats:
    saved_pct: float
    reduction_pct: float
    mean_S: float
    mean_IT: float
    stddev_saved: float
    empty_runs: int


def percent_saved(
    graph: DirectedGraph,
    R: Sequence[int],
    D: Sequence[int],
    biases: BiasTable,
    rule="linear-halving",
    alpha: int = 1,
    runs: int = 100,
    seed: int = 0,
    baseline: np.ndarray | None = None,
) -> SavedStats:
    """Share of misinformation adopters that the campaign turns to T, on paired runs.

    Run ``r`` is simulated once with ``R`` alone and once with ``R`` and ``D``
    on the same seed. ``S_r`` is the set of non-starter nodes in state M at the
    deadline without the campaign. ``saved_pct`` averages
    ``100 * |S_r & T_with| / |S_r|`` and ``reduction_pct`` averages
    ``100 * (|S_r| - |M_with|) / |S_r|`` (both counting non-starters), over runs
    with non-empty ``S_r``. ``mean_IT`` is the mean number of T nodes with the
    campaign. ``baseline`` may carry precomputed campaign-free states for the
    same seeds.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if baseline is None:
        baseline = simulate_final_states(graph, R, [], biases, rule, alpha, runs, seed)
    if len(D):
        with_campaign = simulate_final_states(graph, R, D, biases, rule, alpha, runs, seed)
    else:
        with_campaign = baseline
    starter = np.zeros(graph.n, dtype=bool)
    starter[list(R)] = True
    S = (baseline == M) & ~starter
    size = S.sum(axis=1)
    ok = size > 0
    if not ok.any():
        raise ValueError("rumor never spread: every run has an empty misinformation set")
    saved = (S & (with_campaign == T)).sum(axis=1)
    m_with = ((with_campaign == M) & ~starter).sum(axis=1)
    saved_pct = 100.0 * saved[ok] / size[ok]
    reduction = 100.0 * (size[ok] - m_with[ok]) / size[ok]
    return SavedStats(
        saved_pct=float(saved_pct.mean()),
        reduction_pct=float(reduction.mean()),
        mean_S=float(size[ok].mean()),
        mean_IT=float((with_campaign == T).sum(axis=1)[ok].mean()),
        stddev_saved=float(saved_pct.std()),
        empty_runs=int((~ok).sum()),
    )


def rank_candidates(
    selector: str,
    graph: DirectedGraph,
    R: Sequence[int],
    P: Sequence[int],
    biases: BiasTable,
    rule="linear-halving",
    alpha: int = 1,
    theta: float = DEFAULT_THETA,
    runs: int = 100,
    seed: int = 0,
    dag: Dag | None = None,
) -> list[tuple[int, float]]:
    """Full ranking of ``P`` by ``selector``; the top-k selection is its first k entries."""
    if selector == "ktruthscore":
        dag = build_dag(graph) if dag is None else dag
        return [(s.candidate, s.score) for s in truthscore_ranking(dag, R, P, biases, alpha, theta)]
    if selector == "tmb":
        return [(r.candidate, r.h) for r in tmb_ranking(graph, R, P, biases, get_bias_rule(rule), alpha, runs, seed)]
    if selector == "tib":
        return tib_ranking(graph, R, P, biases, alpha, runs, seed)
    if selector == "random":
        return [(v, 0.0) for v in random_select(P, len(set(P)), seed)]
    raise ValueError(f"unknown selector {selector!r}; choose from {', '.join(SELECTORS)}")


def select(selector, graph, R, P, k, biases, **kw) -> list[tuple[int, float]]:
    if k > len(set(P)):
        raise ValueError(f"k={k} exceeds the {len(set(P))} prospective campaigners")
    if k < 1:
        raise ValueError("k must be positive")
    return rank_candidates(selector, graph, R, P, biases, **kw)[:k]


# --- configuration ----------------------------------------------------------


@dataclass
class ExperimentConfig:
    graph_path: str = ""
    selector: str = "ktruthscore"  # comma-separated list allowed
    k: int = 5
    rumor_count: int = 10
    prospect_count: int = 50
    alpha: int | None = None  # None: undirected diameter
    theta: float = DEFAULT_THETA
    bias_rule: str = "linear"
    repetitions: int = 100
    resamples: int = 5
    master_seed: int = 0
    sweep_param: str | None = None
    sweep_values: tuple = ()
    directed: bool = True
    selector_runs: int = 100
    redraw_probabilities: bool = False
    dag_strategy: str = "dfs"
    jobs: int = 1
    timing: bool = False

    def __post_init__(self):
        for name in ("k", "rumor_count", "prospect_count", "repetitions", "resamples", "selector_runs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.alpha is not None and self.alpha < 1:
            raise ValueError("alpha must be positive")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        for s in self.selectors:
            if s not in SELECTORS:
                raise ValueError(f"unknown selector {s!r}; choose from {', '.join(SELECTORS)}")
        get_bias_rule(self.bias_rule)
        if self.dag_strategy not in DAG_STRATEGIES:
            raise ValueError(f"unknown DAG strategy {self.dag_strategy!r}; choose from {', '.join(DAG_STRATEGIES)}")
        if self.sweep_param is not None and self.sweep_param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.sweep_param!r}; choose from {', '.join(SWEEP_PARAMS)}")
        if isinstance(self.sweep_values, str):
            self.sweep_values = tuple(v.strip() for v in self.sweep_values.split(",") if v.strip())
        self.sweep_values = tuple(self.sweep_values)

    @property
    def selectors(self) -> list[str]:
        return [s.strip() for s in self.selector.split(",") if s.strip()]

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, raw in values.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kw[key] = _coerce(fields[key].default, key, raw)
        return cls(**kw)

    def effective(self) -> dict:
        """Settings that determine results (``jobs`` and ``timing`` excluded)."""
        d = dataclasses.asdict(self)
        d.pop("jobs")
        d.pop("timing")
        d["sweep_values"] = ",".join(map(str, self.sweep_values))
        return d

    def describe(self) -> str:
        return " ".join(f"{k}={'' if v is None else v}" for k, v in self.effective().items())

    def digest(self) -> str:
        return hashlib.sha256(self.describe().encode()).hexdigest()[:16]


def _coerce(default, key, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if key == "alpha":
        return None if raw.lower() in ("", "none", "diameter") else int(raw)
    if key == "sweep_param":
        return raw or None
    if key == "sweep_values":
        return raw
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def read_config_mapping(path) -> dict[str, str]:
    """Raw ``key -> value`` strings from a flat ``key=value`` file; ``#`` starts a comment line."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = s.partition("=")
            values[key.strip()] = val
    return values


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_mapping(read_config_mapping(path))


# --- suites -----------------------------------------------------------------


@dataclass
class ResultRow:
    selector: str
    sweep_param: str
    sweep_value: str
    resample: int
    saved_pct: float
    reduction_pct: float
    mean_S: float
    mean_IT: float
    stddev_saved: float
    runtime_ms: float
    k: int = 0
    rumor_count: int = 0
    alpha: int = 0
    bias_rule: str = ""
    campaigners: tuple = field(default=(), repr=False)

    def csv(self, timing: bool = False) -> str:
        rt = f"{self.runtime_ms:.1f}" if timing else "0"
        return (
            f"{self.selector},{self.sweep_param},{self.sweep_value},{self.resample},"
            f"{self.saved_pct:.6f},{self.reduction_pct:.6f},{self.mean_S:.6f},{self.mean_IT:.6f},"
            f"{self.stddev_saved:.6f},{rt}"
        )


@dataclass
class PreparedGraph:
    graph: DirectedGraph
    dag: Dag
    diameter: int


def prepare_graph(config: ExperimentConfig, graph: DirectedGraph | None = None) -> PreparedGraph:
    """Load (if needed), assign edge probabilities once, build the DAG and measure the diameter."""
    if graph is None:
        graph = load_edge_list(config.graph_path, directed=config.directed)
    graph = assign_edge_probabilities(graph, derive_seed(config.master_seed, _PROBS))
    return PreparedGraph(graph, build_dag(graph, config.dag_strategy), undirected_diameter(graph))


def _sweep_points(config: ExperimentConfig, sweep_param, values):
    points = []
    for raw in values:
        p = {
            "k": config.k,
            "rumor_count": config.rumor_count,
            "alpha": config.alpha,
            "bias_rule": config.bias_rule,
            "selectors": config.selectors,
        }
        if sweep_param == "k":
            p["k"] = int(raw)
        elif sweep_param == "rumor_count":
            p["rumor_count"] = int(raw)
        elif sweep_param == "alpha":
            p["alpha"] = int(raw)
        elif sweep_param == "bias_rule":
            get_bias_rule(str(raw))
            p["bias_rule"] = str(raw)
        elif sweep_param == "selector":
            if raw not in SELECTORS:
                raise ValueError(f"unknown selector {raw!r}")
            p["selectors"] = [str(raw)]
        else:
            raise ValueError(f"unknown sweep parameter {sweep_param!r}; choose from {', '.join(SWEEP_PARAMS)}")
        points.append((str(raw), p))
    return points


def _run_resample(config: ExperimentConfig, prepared: PreparedGraph, sweep_param, points, resample: int):
    graph, dag = prepared.graph, prepared.dag
    if config.redraw_probabilities:
        graph = assign_edge_probabilities(graph, derive_seed(config.master_seed, _PROBS, resample + 1))
        dag = build_dag(graph, config.dag_strategy)
    rankings: dict = {}
    baselines: dict = {}
    rows = []
    for value, p in points:
        alpha = p["alpha"] or prepared.diameter
        if p["rumor_count"] + config.prospect_count > graph.n:
            raise ValueError(f"|R|+|P|={p['rumor_count'] + config.prospect_count} exceeds {graph.n} nodes")
        if p["k"] > config.prospect_count:
            raise ValueError(f"k={p['k']} exceeds prospect_count={config.prospect_count}")
        R, P = pick_seed_sets(graph, p["rumor_count"], config.prospect_count,
                              derive_seed(config.master_seed, _SEEDSETS, resample, p["rumor_count"]))
        biases = assign_biases(graph, R, P, derive_seed(config.master_seed, _BIASES, resample, p["rumor_count"]))
        eval_seed = derive_seed(config.master_seed, _EVAL, resample)
        base_key = (p["rumor_count"], alpha, p["bias_rule"])
        if base_key not in baselines:
            baselines[base_key] = simulate_final_states(
                graph, R, [], biases, p["bias_rule"], alpha, config.repetitions, eval_seed
            )
        for sel in p["selectors"]:
            rank_key = (sel,) + base_key
            if rank_key not in rankings:
                t0 = time.perf_counter()
                ranking = rank_candidates(
                    sel, graph, R, P, biases, rule=p["bias_rule"], alpha=alpha, theta=config.theta,
                    runs=config.selector_runs, seed=derive_seed(config.master_seed, _SELECT, resample), dag=dag,
                )
                rankings[rank_key] = (ranking, 1000.0 * (time.perf_counter() - t0))
            ranking, runtime = rankings[rank_key]
            D = [v for v, _ in ranking[: p["k"]]]
            stats = percent_saved(graph, R, D, biases, p["bias_rule"], alpha, config.repetitions, eval_seed,
                                  baseline=baselines[base_key])
            rows.append(ResultRow(
                selector=sel, sweep_param=sweep_param, sweep_value=value, resample=resample,
                saved_pct=stats.saved_pct, reduction_pct=stats.reduction_pct, mean_S=stats.mean_S,
                mean_IT=stats.mean_IT, stddev_saved=stats.stddev_saved, runtime_ms=runtime,
                k=p["k"], rumor_count=p["rumor_count"], alpha=alpha, bias_rule=p["bias_rule"],
                campaigners=tuple(D),
            ))
    return rows


def run_suite(
    config: ExperimentConfig,
    sweep_param: str | None = None,
    values: Sequence | None = None,
    prepared: PreparedGraph | None = None,
) -> list[ResultRow]:
    """One row per (sweep value, resample, selector), emitted in sweep order.

    Seed sets, biases and evaluation seeds depend only on the master seed, the
    resample index and |R|, so every selector at a sweep point is evaluated on
    identical draws. Rankings do not depend on ``k`` and are reused across a
    ``k`` sweep.
    """
    sweep_param = sweep_param or config.sweep_param
    values = config.sweep_values if values is None else values
    if sweep_param is None:
        sweep_param, values = "k", (config.k,)
    points = _sweep_points(config, sweep_param, values)
    if prepared is None:
        prepared = prepare_graph(config)
    jobs = config.jobs if config.jobs > 0 else (os.cpu_count() or 1)
    resamples = range(config.resamples)
    if jobs > 1 and config.resamples > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, config.resamples)) as pool:
            parts = list(pool.map(_run_resample, *zip(*[(config, prepared, sweep_param, points, r) for r in resamples])))
    else:
        parts = [_run_resample(config, prepared, sweep_param, points, r) for r in resamples]
    rows = [row for part in parts for row in part]
    order = {v: i for i, (v, _) in enumerate(points)}
    sel_order = {s: i for i, s in enumerate(SELECTORS)}
    rows.sort(key=lambda r: (order[r.sweep_value], r.resample, sel_order[r.selector]))
    return rows


@dataclass
class AggregateRow:
    selector: str
    sweep_value: str
    saved_mean: float
    saved_std: float
    reduction_mean: float
    resamples: int


def aggregate(rows: Sequence[ResultRow]) -> list[AggregateRow]:
    """Mean and standard deviation of saved% across resamples, per (sweep value, selector)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.sweep_value, r.selector), []).append(r)
    out = []
    for (value, sel), grp in groups.items():
        saved = np.array([g.saved_pct for g in grp])
        out.append(AggregateRow(sel, value, float(saved.mean()), float(saved.std()),
                                float(np.mean([g.reduction_pct for g in grp])), len(grp)))
    return out


def file_banner(config: ExperimentConfig) -> str:
    return f"# cicmb {__version__} config_sha256={config.digest()}"


def write_csv(rows: Sequence[ResultRow], path, config: ExperimentConfig) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(file_banner(config) + "\n")
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(r.csv(config.timing) + "\n")


def write_plot_data(rows: Sequence[ResultRow], out_dir, config: ExperimentConfig) -> list[Path]:
    """Tab-separated plot data: one file for numeric sweeps, one per value for categorical ones."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        return []
    param = rows[0].sweep_param
    agg = aggregate(rows)
    paths = []
    if param in ("bias_rule", "selector"):
        for value in dict.fromkeys(a.sweep_value for a in agg):
            path = out_dir / f"plot_{param}_{value}.tsv"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(file_banner(config) + "\n")
                fh.write("selector\tsaved_mean\tsaved_std\treduction_mean\tresamples\n")
                for a in agg:
                    if a.sweep_value == value:
                        fh.write(f"{a.selector}\t{a.saved_mean:.6f}\t{a.saved_std:.6f}\t{a.reduction_mean:.6f}\t{a.resamples}\n")
            paths.append(path)
    else:
        path = out_dir / f"plot_{param}.tsv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(file_banner(config) + "\n")
            fh.write(f"{param}\tselector\tsaved_mean\tsaved_std\treduction_mean\tresamples\n")
            for a in agg:
                fh.write(f"{a.sweep_value}\t{a.selector}\t{a.saved_mean:.6f}\t{a.saved_std:.6f}\t{a.reduction_mean:.6f}\t{a.resamples}\n")
        paths.append(path)
    return paths
