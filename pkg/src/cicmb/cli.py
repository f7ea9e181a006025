"""Command-line entry point: ``cicmb {ingest,select,simulate,evaluate,suite}``."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import (
    _BIASES,
    _EVAL,
    _SEEDSETS,
    _SELECT,
    SELECTORS,
    SWEEP_PARAMS,
    ExperimentConfig,
    assign_biases,
    derive_seed,
    file_banner,
    read_config_mapping,
    percent_saved,
    pick_seed_sets,
    prepare_graph,
    rank_candidates,
    run_suite,
    write_csv,
    write_plot_data,
)
from .graph import load_edge_list, summary_record, undirected_diameter
from .propagation import N, M, T, run_cicmb, simulate_final_states, write_activation_log
from .truthscore import compute_mval, compute_tval, write_schedule

# flag -> ExperimentConfig field
_FLAG_FIELDS = {
    "graph": "graph_path",
    "directed": "directed",
    "selector": "selector",
    "k": "k",
    "rumor_count": "rumor_count",
    "prospect_count": "prospect_count",
    "alpha": "alpha",
    "theta": "theta",
    "bias_rule": "bias_rule",
    "reps": "repetitions",
    "resamples": "resamples",
    "seed": "master_seed",
    "sweep": "sweep_param",
    "values": "sweep_values",
    "jobs": "jobs",
    "timing": "timing",
    "dag_strategy": "dag_strategy",
    "selector_runs": "selector_runs",
}


class CliError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--directed", action=argparse.BooleanOptionalAction, default=None,
                   help="treat lines as directed edges (default) or add both directions")
    p.add_argument("--selector", help=f"one of {', '.join(SELECTORS)} (comma list for suites)")
    p.add_argument("--k", type=int)
    p.add_argument("--rumor-count", type=int)
    p.add_argument("--prospect-count", type=int)
    p.add_argument("--alpha", type=int, help="deadline in rounds (default: undirected diameter)")
    p.add_argument("--theta", type=float)
    p.add_argument("--bias-rule", help="linear or quadratic")
    p.add_argument("--reps", type=int, help="Monte-Carlo repetitions per evaluation")
    p.add_argument("--resamples", type=int)
    p.add_argument("--selector-runs", type=int, help="simulations used inside TMB/TIB")
    p.add_argument("--dag-strategy")
    p.add_argument("--seed", type=int, help="master seed (default: time based, printed)")
    p.add_argument("--jobs", type=int, help="worker processes (0: all cores)")
    p.add_argument("--timing", action="store_true", default=None, help="record runtime_ms in CSV output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cicmb", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cicmb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load an edge list and print a summary record")
    p.add_argument("--graph", required=True)
    p.add_argument("--directed", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--exact-threshold", type=int, default=10_000,
                   help="largest component size for exact diameter")

    p = sub.add_parser("select", help="choose k truth campaigners and print 'node score' lines")
    _add_common(p)
    p.add_argument("--resample", type=int, default=0, help="which seed-set draw to use")
    p.add_argument("--schedule-out", help="write mval/tval schedules (ktruthscore only)")

    p = sub.add_parser("simulate", help="run CICMB cascades from the drawn seed sets")
    _add_common(p)
    p.add_argument("--resample", type=int, default=0)
    p.add_argument("--log-out", help="write per-run activation logs")

    p = sub.add_parser("evaluate", help="select campaigners and report percent saved")
    _add_common(p)
    p.add_argument("--resample", type=int, default=0)

    p = sub.add_parser("suite", help="run a parameter sweep and write CSV and plot data")
    _add_common(p)
    p.add_argument("--sweep", choices=SWEEP_PARAMS)
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_mapping(args.config))
    for flag, key in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    if "master_seed" not in values:
        values["master_seed"] = time.time_ns() % (2**31)
    if not values.get("graph_path"):
        raise CliError("no graph given (use --graph or graph_path in --config)")
    return ExperimentConfig.from_mapping(values)


def _echo_config(config: ExperimentConfig) -> None:
    print(f"# cicmb {__version__} {config.describe()}", file=sys.stderr)


def _load(config: ExperimentConfig):
    path = Path(config.graph_path)
    if not path.is_file():
        raise CliError(f"graph file not found: {path}")
    return prepare_graph(config, load_edge_list(path, directed=config.directed))


def _draw(config: ExperimentConfig, prepared, resample: int):
    graph = prepared.graph
    R, P = pick_seed_sets(graph, config.rumor_count, config.prospect_count,
                          derive_seed(config.master_seed, _SEEDSETS, resample, config.rumor_count))
    biases = assign_biases(graph, R, P, derive_seed(config.master_seed, _BIASES, resample, config.rumor_count))
    return R, P, biases, config.alpha or prepared.diameter


def _select(config, prepared, resample, selector=None):
    R, P, biases, alpha = _draw(config, prepared, resample)
    selector = selector or config.selectors[0]
    if config.k > len(P):
        raise CliError(f"k={config.k} exceeds prospect_count={len(P)}")
    ranking = rank_candidates(
        selector, prepared.graph, R, P, biases, rule=config.bias_rule, alpha=alpha, theta=config.theta,
        runs=config.selector_runs, seed=derive_seed(config.master_seed, _SELECT, resample), dag=prepared.dag,
    )
    return R, P, biases, alpha, ranking[: config.k]


def cmd_ingest(args) -> int:
    path = Path(args.graph)
    if not path.is_file():
        raise CliError(f"graph file not found: {path}")
    graph = load_edge_list(path, directed=args.directed)
    print(summary_record(graph, undirected_diameter(graph, exact_threshold=args.exact_threshold)))
    return 0


def cmd_select(args) -> int:
    config = config_from_args(args)
    _echo_config(config)
    prepared = _load(config)
    R, P, biases, alpha, chosen = _select(config, prepared, args.resample)
    ids = prepared.graph.original_ids
    for v, score in chosen:
        print(f"{ids[v]} {score:.6g}")
    if args.schedule_out:
        if config.selectors[0] != "ktruthscore":
            raise CliError("--schedule-out needs selector=ktruthscore")
        with open(args.schedule_out, "w", encoding="utf-8") as fh:
            fh.write(file_banner(config) + "\n")
            mval, A = compute_mval(prepared.dag, R, biases, alpha, config.theta)
            write_schedule(mval, fh, sorted(A | set(R)))
            for v, _ in chosen:
                tval, B = compute_tval(prepared.dag, v, R, biases, alpha, config.theta)
                write_schedule(tval, fh, sorted(B | {v}))
    return 0


def cmd_simulate(args) -> int:
    config = config_from_args(args)
    _echo_config(config)
    prepared = _load(config)
    graph = prepared.graph
    if args.selector:
        R, P, biases, alpha, chosen = _select(config, prepared, args.resample)
        D = [v for v, _ in chosen]
    else:
        R, P, biases, alpha = _draw(config, prepared, args.resample)
        D = []
    seed = derive_seed(config.master_seed, _EVAL, args.resample)
    states = simulate_final_states(graph, R, D, biases, config.bias_rule, alpha, config.repetitions, seed)
    counts = [(states == s).sum(axis=1).mean() for s in (N, M, T)]
    print(f"runs={config.repetitions} alpha={alpha} rumor={len(R)} campaigners={len(D)} "
          f"mean_N={counts[0]:.3f} mean_M={counts[1]:.3f} mean_T={counts[2]:.3f}")
    if args.log_out:
        results = [run_cicmb(graph, R, D, biases, config.bias_rule, alpha, seed + i)
                   for i in range(config.repetitions)]
        with open(args.log_out, "w", encoding="utf-8") as fh:
            fh.write(file_banner(config) + "\n")
            write_activation_log(results, fh, graph.original_ids)
    return 0


def cmd_evaluate(args) -> int:
    config = config_from_args(args)
    _echo_config(config)
    prepared = _load(config)
    for selector in config.selectors:
        R, P, biases, alpha, chosen = _select(config, prepared, args.resample, selector)
        D = [v for v, _ in chosen]
        stats = percent_saved(prepared.graph, R, D, biases, config.bias_rule, alpha, config.repetitions,
                              derive_seed(config.master_seed, _EVAL, args.resample))
        print(f"selector={selector} k={config.k} saved_pct={stats.saved_pct:.4f} "
              f"reduction_pct={stats.reduction_pct:.4f} mean_S={stats.mean_S:.3f} mean_IT={stats.mean_IT:.3f} "
              f"stddev_saved={stats.stddev_saved:.4f}")
    return 0


def cmd_suite(args) -> int:
    config = config_from_args(args)
    if config.sweep_param is None:
        raise CliError("suite needs --sweep (or sweep_param in --config)")
    if not config.sweep_values:
        raise CliError("suite needs --values (or sweep_values in --config)")
    _echo_config(config)
    prepared = _load(config)
    rows = run_suite(config, prepared=prepared)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out / "results.csv", config)
    for path in write_plot_data(rows, out, config):
        print(path, file=sys.stderr)
    print(out / "results.csv", file=sys.stderr)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "select": cmd_select,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, ValueError, OSError) as exc:
        print(f"cicmb {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
