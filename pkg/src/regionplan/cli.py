"""Command-line entry point: ``regionplan <group> <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, envgen
from .critical_regions import (
    PlanCorpus,
    estimate_criticality,
    export_regions_raster,
    extract_regions,
    generate_corpus,
    import_regions_raster,
    load_regions,
    save_regions,
)
from .cspace import HINGED4, POINT2, RECT3, CAR3, ProblemSpace, RobotModel, car_robot, hinged_robot, point_robot, rect_robot
from .harp import HarpConfig, harp_plan
from .hl_search import HeuristicTable
from .io import load_scenario, save_environment
from .ll_planner import PLANNERS, Budget, birrt_plan

ROBOTS = {POINT2: point_robot, RECT3: rect_robot, HINGED4: hinged_robot, CAR3: car_robot}


def _robot(args) -> RobotModel:
    if args.robot_file:
        return RobotModel.from_dict(json.loads(Path(args.robot_file).read_text()))
    return ROBOTS[args.robot]()


def _budget(args, default_seconds: float) -> Budget:
    secs = getattr(args, "budget_seconds", None)
    samples = getattr(args, "budget_samples", None)
    if secs is None and samples is None:
        secs = default_seconds
    return Budget(seconds=secs, samples=samples)


def _space(args) -> ProblemSpace:
    return ProblemSpace(bench.resolve_environment(args.env, args.resolution), _robot(args))


def _add_env(p):
    p.add_argument("--env", required=True, help="generator name or grid file")
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--robot", choices=sorted(ROBOTS), default=RECT3)
    p.add_argument("--robot-file", help="JSON robot description (overrides --robot)")


def _add_budget(p, single=True):
    if single:
        p.add_argument("--budget-seconds", type=float)
        p.add_argument("--budget-samples", type=int)
    p.add_argument("--seed", type=int, default=0)


def cmd_corpus_generate(args):
    space = _space(args)
    planner = PLANNERS.get(args.planner, birrt_plan)
    corpus = generate_corpus(space, args.goals, args.starts, planner, np.random.default_rng(args.seed),
                             budget=_budget(args, 5.0), environment=args.env)
    corpus.save(args.out)
    print(f"{len(corpus)} plans ({corpus.skipped} skipped) -> {args.out}")


def cmd_cr_estimate(args):
    space = _space(args)
    field_ = estimate_criticality(PlanCorpus.load(args.corpus), space)
    files = export_regions_raster(args.out, space, field_.criticality, field_.dominant_bins())
    print("\n".join(str(f) for f in files))


def cmd_cr_extract(args):
    space = _space(args)
    field_ = estimate_criticality(PlanCorpus.load(args.corpus), space)
    regions = extract_regions(field_, space, args.threshold, args.min_cells, args.samples,
                              np.random.default_rng(args.seed))
    save_regions(args.out, regions)
    print(f"{len(regions)} regions -> {args.out}")


def cmd_cr_import(args):
    space = _space(args)
    regions = import_regions_raster(args.rasters, space, args.threshold, args.samples,
                                    np.random.default_rng(args.seed), min_cells=args.min_cells)
    save_regions(args.out, regions)
    print(f"{len(regions)} regions -> {args.out}")


def cmd_harp_solve(args):
    problem = load_scenario(args.scenario)
    budget = _budget(args, 10.0)
    rng = np.random.default_rng(args.seed)
    regions = load_regions(args.regions) if args.regions else []
    table = HeuristicTable.load(args.heuristic) if args.heuristic and Path(args.heuristic).exists() else HeuristicTable()
    if args.planner == "harp":
        res = harp_plan(problem, regions, table, HarpConfig(budget=budget, seed=args.seed), rng=rng)
        traj, stats, plans = res.trajectory, res.stats, [list(p.states) for p in res.plans]
        if args.heuristic:
            table.save(args.heuristic)
    else:
        traj, stats = bench.run_planner(args.planner, problem, budget, rng, regions)
        plans = []
    out = {
        "success": traj is not None,
        "planner": args.planner,
        "trajectory": None if traj is None else traj.waypoints.tolist(),
        "stats": {"seconds": stats.seconds, "samples": stats.samples, "checks": stats.checks, "hl_plans": len(plans)},
        "plans": plans,
    }
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    print(f"success={out['success']} -> {args.out}")
    return 0 if traj is not None else 1


def cmd_bench_curve(args):
    if args.budget_samples:
        kind, budgets = "samples", args.budget_samples
    else:
        kind, budgets = "seconds", args.budget_seconds or [0.5, 1.0, 2.0, 5.0, 10.0, 30.0]
    spec = bench.ExperimentSpec(
        environments=args.env, robot=_robot(args), planners=args.planner, queries=args.queries,
        budgets=budgets, budget_kind=kind, seed=args.seed, regions=bench.load_region_map(args.regions),
        resolution=args.resolution, output=args.out,
    )
    table = bench.run_success_curve(spec, jobs=args.jobs)
    formats = ("csv", "json", "dat") if args.gnuplot else ("csv", "json")
    for f in bench.emit(table, args.out, formats):
        print(f)


def cmd_bench_heuristic(args):
    space = _space(args)
    regions = load_regions(args.regions) if args.regions else []
    cfg = HarpConfig(budget=_budget(args, 10.0), seed=args.seed)
    curves = bench.run_heuristic_curve(space, regions, args.problems, args.repetitions, tuple(args.modes), cfg,
                                       seed=args.seed, window=args.window)
    Path(args.out).write_text(bench.curves_to_csv(curves))
    print(args.out)


def cmd_env_gen(args):
    rng = np.random.default_rng(args.seed)
    kw = {"size": args.size, "resolution": args.resolution}
    if args.kind == "rooms":
        kw.update(rooms=(args.rooms, args.rooms), rng=rng if args.random_doors else None)
    if args.kind in ("doorway", "rooms"):
        kw["door_width"] = args.door_width
    if args.kind == "zigzag":
        kw.update(walls=args.walls, gap=args.door_width)
    save_environment(args.out, envgen.GENERATORS[args.kind](**kw))
    print(args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regionplan")
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group", required=True)

    corpus = groups.add_parser("corpus").add_subparsers(dest="command", required=True)
    p = corpus.add_parser("generate", help="solve random queries and store the plans")
    _add_env(p)
    _add_budget(p)
    p.add_argument("--goals", type=int, default=10)
    p.add_argument("--starts", type=int, default=10, help="starts per goal")
    p.add_argument("--planner", choices=sorted(PLANNERS), default="birrt")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corpus_generate)

    cr = groups.add_parser("cr").add_subparsers(dest="command", required=True)
    p = cr.add_parser("estimate", help="criticality rasters from a corpus")
    _add_env(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="raster prefix; writes <prefix>_ch<k>.pgm")
    p.set_defaults(func=cmd_cr_estimate)
    for name, func in (("extract", cmd_cr_extract), ("import", cmd_cr_import)):
        p = cr.add_parser(name)
        _add_env(p)
        if name == "extract":
            p.add_argument("--corpus", required=True)
        else:
            p.add_argument("--rasters", nargs="+", required=True)
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--min-cells", type=int, default=1)
        p.add_argument("--samples", type=int, default=30, help="samples per region")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    harp = groups.add_parser("harp").add_subparsers(dest="command", required=True)
    p = harp.add_parser("solve")
    p.add_argument("--scenario", required=True)
    p.add_argument("--regions")
    p.add_argument("--heuristic", help="heuristic table file, read and updated in place")
    p.add_argument("--planner", choices=bench.PLANNER_NAMES, default="harp")
    _add_budget(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_harp_solve)

    bgroup = groups.add_parser("bench").add_subparsers(dest="command", required=True)
    p = bgroup.add_parser("curve", help="solved fraction against budget")
    p.add_argument("--env", nargs="+", required=True)
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--robot", choices=sorted(ROBOTS), default=RECT3)
    p.add_argument("--robot-file")
    p.add_argument("--planner", nargs="+", choices=bench.PLANNER_NAMES, default=["harp", "rrt", "prm"])
    p.add_argument("--regions", nargs="*", default=[], help="env=regions.json pairs")
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--budget-seconds", type=float, nargs="+")
    p.add_argument("--budget-samples", type=int, nargs="+")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gnuplot", action="store_true", help="also write a .dat file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench_curve)

    p = bgroup.add_parser("heuristic", help="solve time across repeated solves")
    _add_env(p)
    _add_budget(p)
    p.add_argument("--regions")
    p.add_argument("--problems", type=int, default=20)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--modes", nargs="+", choices=["per-problem", "shared"], default=["per-problem", "shared"])
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; runs are sequential")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench_heuristic)

    env = groups.add_parser("env").add_subparsers(dest="command", required=True)
    p = env.add_parser("gen")
    p.add_argument("--kind", choices=sorted(envgen.GENERATORS), default="doorway")
    p.add_argument("--size", type=float, default=5.0)
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--door-width", type=float, default=0.2)
    p.add_argument("--rooms", type=int, default=2)
    p.add_argument("--walls", type=int, default=3)
    p.add_argument("--random-doors", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".pgm or ASCII grid path")
    p.set_defaults(func=cmd_env_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return int(args.func(args) or 0)


if __name__ == "__main__":
    sys.exit(main())
