"""Command-line front end.

Exit codes:
  0  success
  2  invalid input (unreadable file, mission or plan violating its invariants)
  3  capacity (instance too large for the exact solver)
  4  inconsistency (imported solver solution disagrees with its plan)
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import networkx as nx
import numpy as np

from . import library
from .evaluate import (PlanError, delivery_probabilities, expected_value_multi, survival_probability,
                       union_probability)
from .exact import CapacityError, default_horizon, dp_state_count, solve_exact
from .genetic import ABLATIONS, GaConfig, run_ga
from .milp import ObjectiveMismatch, SolutionError, build_milp, export_lp, import_solution, parse_solution
from .mission import (MissionError, MultiPlan, load_mission, load_plans, make_hardness_instance,
                      make_path_instance, save_mission, save_plans, validate_mission, validate_plan)

EXIT_OK, EXIT_INVALID, EXIT_CAPACITY, EXIT_MISMATCH = 0, 2, 3, 4

BENCH_HEADER = ["instance", "method", "runs", "successes", "best", "mean_seconds"]


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_mission(path):
    try:
        m = load_mission(path)
    except (OSError, json.JSONDecodeError, MissionError) as exc:
        raise CliError(f"cannot load mission {path}: {exc}", EXIT_INVALID) from exc
    problem = validate_mission(m)
    if problem is not None:
        raise CliError(f"invalid mission {path}: {problem}", EXIT_INVALID)
    return m


def _load_plans(path, m) -> MultiPlan:
    try:
        plans = load_plans(path)
    except (OSError, json.JSONDecodeError, MissionError) as exc:
        raise CliError(f"cannot load plan {path}: {exc}", EXIT_INVALID) from exc
    for d, plan in enumerate(plans):
        problem = validate_plan(m, plan)
        if problem is not None:
            raise CliError(f"invalid plan for drone {d}: {problem}", EXIT_INVALID)
    return plans


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _print_plan(plans: MultiPlan) -> None:
    for d, plan in enumerate(plans):
        label = f"drone {d}: " if len(plans) > 1 else ""
        print(f"{label}route {' '.join(map(str, plan.route))}")
        print(f"{label}send  {' '.join(map(str, plan.send))}")


# ---------------------------------------------------------------- commands

def cmd_evaluate(args) -> int:
    m = _load_mission(args.mission)
    plans = _load_plans(args.plan, m)
    value = expected_value_multi(m, plans)
    deliveries = np.array([delivery_probabilities(m, p) for p in plans])
    union = union_probability(deliveries)
    print(f"expected value: {_fmt(value)}")
    for d, plan in enumerate(plans):
        label = f" (drone {d})" if len(plans) > 1 else ""
        print(f"survival probability{label}: {_fmt(survival_probability(m, plan))}")
    print("delivery probabilities:")
    for v in range(m.n):
        print(f"  {v}: {_fmt(union[v])}")
    return EXIT_OK


def _ga_config(args, drones: int) -> GaConfig:
    cfg = GaConfig(drones=drones, seed=args.seed, **ABLATIONS[args.mutations])
    overrides = {k: getattr(args, k) for k in ("population", "generations", "l_min", "l_max")
                 if getattr(args, k) is not None}
    if args.return_path:
        overrides["return_path_metric"] = args.return_path
    cfg = replace(cfg, **overrides)
    try:
        cfg.validate()
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc
    return cfg


def cmd_solve(args) -> int:
    m = _load_mission(args.mission)
    if args.method == "exact":
        if args.drones != 1:
            raise CliError("the exact solver handles a single drone only", EXIT_INVALID)
        horizon = args.horizon if args.horizon is not None else default_horizon(m.n)
        try:
            plan, value = solve_exact(m, horizon)
        except CapacityError as exc:
            raise CliError(f"instance too large for the exact solver: about "
                           f"{dp_state_count(m.n, horizon):,} states ({exc})", EXIT_CAPACITY) from exc
        plans = MultiPlan((plan,))
    else:
        result = run_ga(m, _ga_config(args, args.drones))
        plans, value = result.best, result.value
        if args.trace:
            result.trace.to_csv(args.trace)
    if args.out:
        save_plans(plans[0] if len(plans) == 1 else plans, args.out)
    _print_plan(plans)
    print(f"expected value: {_fmt(value)}")
    return EXIT_OK


def cmd_export_milp(args) -> int:
    m = _load_mission(args.mission)
    model = build_milp(m, args.horizon, literal_send_bounds=args.literal_send_bounds)
    Path(args.out).write_text(export_lp(model), encoding="utf-8")
    print(f"{len(model.variables)} variables, {len(model.constraints)} constraints -> {args.out}")
    return EXIT_OK


def cmd_import_solution(args) -> int:
    m = _load_mission(args.mission)
    model = build_milp(m, args.horizon, literal_send_bounds=args.literal_send_bounds)
    try:
        values = parse_solution(Path(args.solution).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read solution: {exc}", EXIT_INVALID) from exc
    except SolutionError as exc:
        raise CliError(f"malformed solution: {exc}", EXIT_INVALID) from exc
    try:
        plan, value, objective = import_solution(m, model, values)
    except ObjectiveMismatch as exc:
        _print_plan(MultiPlan((exc.plan,)))
        print(f"plan value: {_fmt(exc.value)}")
        print(f"model objective: {_fmt(exc.objective)}")
        raise CliError(str(exc), EXIT_MISMATCH) from exc
    except SolutionError as exc:
        raise CliError(f"inconsistent solution: {exc}", EXIT_MISMATCH) from exc
    if args.out:
        save_plans(plan, args.out)
    _print_plan(MultiPlan((plan,)))
    print(f"plan value: {_fmt(value)}")
    print(f"model objective: {_fmt(objective)}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.kind == "path":
        m = make_path_instance(args.n)
    else:
        rng = np.random.default_rng(args.seed)
        while True:
            g = nx.gnp_random_graph(args.n, args.density, seed=int(rng.integers(2**31)))
            if nx.is_connected(g):
                break
        m, r = make_hardness_instance(g, args.q)
        print(f"threshold r = {_fmt(r)}")
    save_mission(m, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- benchmark

@dataclass(frozen=True)
class BenchCell:
    instance: str
    method: str
    config: GaConfig
    target: float


@dataclass(frozen=True)
class BenchRow:
    instance: str
    method: str
    runs: int
    successes: int
    best: float
    mean_seconds: float


def reference_suite(base: Optional[GaConfig] = None) -> list[BenchCell]:
    """Ablation grid on K10 plus the small single-drone and two-drone instances."""
    base = base or GaConfig()
    cells = []
    k10 = library.reference("k10")
    for name, preset in ABLATIONS.items():
        cells.append(BenchCell("k10", f"ga:{name}", replace(base, **preset), k10))
    cells.append(BenchCell("fig1", "ga:combination", base, library.reference("fig1")))
    two = replace(base, drones=2)
    cells.append(BenchCell("k6-multi", "ga:2-drones", two, library.reference("k6-multi")))
    cells.append(BenchCell("k10-multi", "ga:2-drones", two, library.reference("k10-multi")))
    # beating the single-drone optimum is the practical bar for two drones on K10
    single = library.manifest()["k10-multi"]["single_drone_reference"]
    cells.append(BenchCell("k10-multi", "ga:2-drones>single", two, single))
    return cells


def _bench_run(task):
    instance, config = task
    start = time.perf_counter()
    result = run_ga(library.mission(instance), config)
    return result.value, time.perf_counter() - start


def run_bench(cells: Sequence[BenchCell], runs: int, seed_base: int = 0,
              workers: int = 1) -> list[BenchRow]:
    # identical (instance, config, seed) runs are shared between cells
    keys = []
    for cell in cells:
        for r in range(runs):
            key = (cell.instance, replace(cell.config, seed=seed_base + r))
            if key not in keys:
                keys.append(key)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_bench_run, keys))
    else:
        outcomes = [_bench_run(k) for k in keys]
    done = dict(zip(keys, outcomes))
    rows = []
    for cell in cells:
        res = [done[(cell.instance, replace(cell.config, seed=seed_base + r))] for r in range(runs)]
        values = [v for v, _ in res]
        rows.append(BenchRow(
            cell.instance, cell.method, runs,
            sum(v >= cell.target - library.SUCCESS_TOL for v in values),
            max(values), sum(t for _, t in res) / runs,
        ))
    return rows


def write_bench_csv(rows: Sequence[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(BENCH_HEADER)
        for r in rows:
            out.writerow([r.instance, r.method, r.runs, r.successes, repr(r.best), f"{r.mean_seconds:.3f}"])


def format_bench_table(rows: Sequence[BenchRow]) -> str:
    lines = [f"{'instance':<10} {'method':<22} {'success':>9} {'best':>12} {'s/run':>8}"]
    for r in rows:
        lines.append(f"{r.instance:<10} {r.method:<22} {r.successes:>4}/{r.runs:<4} "
                     f"{r.best:>12.6f} {r.mean_seconds:>8.2f}")
    return "\n".join(lines)


def cmd_bench(args) -> int:
    base = GaConfig()
    if args.population is not None:
        base = replace(base, population=args.population)
    if args.generations is not None:
        base = replace(base, generations=args.generations)
    cells = reference_suite(base)
    if args.instances:
        cells = [c for c in cells if c.instance in args.instances]
    rows = run_bench(cells, args.runs, args.seed_base, args.workers)
    print(format_bench_table(rows))
    if args.csv:
        write_bench_csv(rows, args.csv)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_ga_flags(p):
    g = p.add_argument_group("genetic algorithm")
    g.add_argument("--population", type=int)
    g.add_argument("--generations", type=int)
    g.add_argument("--l-min", dest="l_min", type=int, help="shortest random walk (default n-1)")
    g.add_argument("--l-max", dest="l_max", type=int, help="longest random walk (default n+100)")
    g.add_argument("--mutations", choices=sorted(ABLATIONS), default="combination",
                   help="mutation preset (default: combination, i.e. all)")
    g.add_argument("--return-path", choices=["survival", "hops"],
                   help="how random walks return to the base: fewest crossings (default) or most reliable path")
    g.add_argument("--trace", help="write the per-generation best/mean trace as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reconplan",
        description="Plan routes and transmissions for risky reconnaissance missions.",
        epilog="exit codes: 0 ok, 2 invalid input, 3 instance too large for the exact solver, "
               "4 solver solution inconsistent with its plan",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="expected value of a plan or multi-drone plan")
    p.add_argument("mission")
    p.add_argument("plan")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("solve", help="find a plan with the exact solver or the genetic algorithm")
    p.add_argument("mission")
    p.add_argument("--method", choices=["exact", "ga"], default="ga")
    p.add_argument("--drones", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, help="crossing budget for the exact solver (default n^2-1)")
    p.add_argument("--out", help="write the plan as JSON")
    _add_ga_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-milp", help="write the mixed-integer model as an LP file")
    p.add_argument("mission")
    p.add_argument("out")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--literal-send-bounds", action="store_true",
                   help="use the alternative send-value bounds (see docs/formats.md)")
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("import-solution", help="rebuild a plan from a solver assignment")
    p.add_argument("mission")
    p.add_argument("solution", help="'name value' lines")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--literal-send-bounds", action="store_true")
    p.add_argument("--out", help="write the plan as JSON")
    p.set_defaults(func=cmd_import_solution)

    p = sub.add_parser("generate", help="write a special instance")
    p.add_argument("kind", choices=["path", "hardness"])
    p.add_argument("n", type=int)
    p.add_argument("out")
    p.add_argument("--q", type=float, default=0.5, help="crossing probability (hardness)")
    p.add_argument("--density", type=float, default=0.5, help="edge probability (hardness)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="success rates of the genetic algorithm on the bundled instances")
    p.add_argument("--suite", choices=["paper"], default="paper",
                   help="the bundled reference instances and ablation grid")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--instances", nargs="+", help="restrict to these instance names")
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--csv", help="write the report as CSV")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (PlanError, MissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
