"""Command-line surface: run, compare, plot, oracle.

Exit codes: 0 success, 2 configuration error, 3 at least one collision run.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, load_config
from .optimizer import (
    BaseAvProblem,
    InflowProblem,
    OutflowProblem,
    oracle_base_av,
    oracle_inflow,
    oracle_outflow,
    solve_base_av,
    solve_inflow,
    solve_outflow,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COLLISION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turnsim",
        description="Deterministic left-turn intersection simulator with three vehicle policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the Monte Carlo suite and write metrics + traces")
    run_p.add_argument("--config", required=True, help="scenario configuration JSON file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--workers", type=int, default=None, help="worker processes (default: TURNSIM_WORKERS or CPU count)")

    cmp_p = sub.add_parser("compare", help="run (or reuse) the suite and write summary.csv + report.txt")
    cmp_p.add_argument("--config", required=True)
    cmp_p.add_argument("--out", required=True)
    cmp_p.add_argument("--workers", type=int, default=None)

    plot_p = sub.add_parser("plot", help="render SVG figures from a results directory")
    plot_p.add_argument("--in", dest="results", required=True, help="directory holding metrics.csv and traces")
    plot_p.add_argument("--out", default=None, help="output directory (default: the results directory)")

    ora_p = sub.add_parser("oracle", help="print solver-vs-brute-force comparison tables as CSV")
    ora_p.add_argument("--instances", type=int, default=20, help="random instances per problem family")
    ora_p.add_argument("--seed", type=int, default=7)
    return parser


def _cmd_run(args) -> int:
    from .experiments import run_suite

    config = load_config(args.config)
    records = run_suite(config, args.out, workers=args.workers)
    n_coll = sum(1 for r in records if r.collision)
    print(f"{len(records)} runs complete, {n_coll} with collisions; metrics in {args.out}/metrics.csv")
    return EXIT_COLLISION if n_coll else EXIT_OK


def _cmd_compare(args) -> int:
    from .experiments import compare, load_metrics
    from pathlib import Path

    config = load_config(args.config)
    compare(config, args.out, workers=args.workers)
    records = load_metrics(Path(args.out) / "metrics.csv")
    n_coll = sum(1 for r in records if r.collision)
    print(f"summary in {args.out}/summary.csv, report in {args.out}/report.txt")
    return EXIT_COLLISION if n_coll else EXIT_OK


def _cmd_plot(args) -> int:
    from .plots import emit_plots

    paths = emit_plots(args.results, args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    print("problem,instance,param,solver_objective,oracle_objective,gap,agree_feasible")
    corner_cases = [
        ("inflow", InflowProblem(v_start=13.4), solve_inflow, oracle_inflow, "v_start=13.4"),
        ("outflow", OutflowProblem(v_start=2.5), solve_outflow, oracle_outflow, "v_start=2.5"),
        ("base_av", BaseAvProblem(d_in=270.45, v_max=13.4), solve_base_av, oracle_base_av, "d_in=270.45"),
    ]
    rows = []
    for name, problem, solver, oracle, label in corner_cases:
        rows.append((name, "corner", label, problem, solver, oracle))
    for i in range(args.instances):
        rows.append(("inflow", f"r{i}", None, InflowProblem(v_start=float(rng.uniform(2.6, 20.0))), solve_inflow, oracle_inflow))
    for i in range(args.instances):
        rows.append(("outflow", f"r{i}", None, OutflowProblem(v_start=float(rng.uniform(0.0, 5.9))), solve_outflow, oracle_outflow))
    for i in range(args.instances):
        rows.append(("base_av", f"r{i}", None, BaseAvProblem(d_in=float(rng.uniform(10.0, 600.0)), v_max=13.4), solve_base_av, oracle_base_av))

    for name, inst, label, problem, solver, oracle in rows:
        s = solver(problem)
        o = oracle(problem)
        s_feas = s.feasible
        s_obj = getattr(s, "objective", None)
        if s_obj is None:
            s_obj = s.total_time
        if label is None:
            label = _param_label(problem)
        if s_feas and o.feasible:
            gap = s_obj - o.objective
            print(f"{name},{inst},{label},{s_obj:.6f},{o.objective:.6f},{gap:.2e},1")
        else:
            print(f"{name},{inst},{label},{'inf' if not s_feas else f'{s_obj:.6f}'},"
                  f"{'inf' if not o.feasible else f'{o.objective:.6f}'},n/a,{int(s_feas == o.feasible)}")
    return EXIT_OK


def _param_label(problem) -> str:
    if isinstance(problem, InflowProblem) or isinstance(problem, OutflowProblem):
        return f"v_start={problem.v_start:.3f}"
    return f"d_in={problem.d_in:.2f}"


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "plot":
            return _cmd_plot(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error("unknown command")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
