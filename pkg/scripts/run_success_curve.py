"""Solved fraction against time budget for HARP and the sampling baselines.

Builds empirical critical regions for each environment first, then runs the
paired success curve and writes CSV/JSON (and gnuplot data) to --out.
"""

import argparse
import logging
import time

from regionplan import bench
from regionplan.cli import ROBOTS
from regionplan.critical_regions import save_regions
from regionplan.cspace import ProblemSpace, RECT3


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--env", nargs="+", default=["rooms"])
    ap.add_argument("--robot", choices=sorted(ROBOTS), default=RECT3)
    ap.add_argument("--planners", nargs="+", default=["harp", "rrt", "prm"])
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--budgets", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--goals", type=int, default=30)
    ap.add_argument("--starts", type=int, default=4)
    ap.add_argument("--threshold", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/success_curve.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    robot = ROBOTS[args.robot]()
    regions = {}
    for env in args.env:
        t0 = time.time()
        space = ProblemSpace(bench.resolve_environment(env), robot)
        regions[env] = bench.empirical_regions(space, args.goals, args.starts, args.threshold, args.seed,
                                               environment=env)
        logging.info("%s: %d regions in %.1fs", env, len(regions[env]), time.time() - t0)

    spec = bench.ExperimentSpec(args.env, robot, args.planners, args.queries, args.budgets, "seconds",
                                args.seed, regions, output=args.out)
    table = bench.run_success_curve(spec, jobs=args.jobs)
    from pathlib import Path
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    for env, regs in regions.items():
        save_regions(Path(args.out).with_name(f"{Path(env).stem}_regions.json"), regs)
    for path in bench.emit(table, args.out, ("csv", "json", "dat")):
        logging.info("wrote %s", path)
    for r in table.rows:
        print(f"{r.planner:6s} {r.environment:10s} {r.budget:6.2f}s  {r.fraction:.2f}")


if __name__ == "__main__":
    main()
