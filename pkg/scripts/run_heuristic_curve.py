"""Mean solve time across repeated solves while the heuristic learns.

Solves --problems random queries --repetitions times, once with a table per
problem and once with one shared table, and writes the per-iteration series.
"""

import argparse
import logging
from pathlib import Path

from regionplan import bench
from regionplan.cli import ROBOTS
from regionplan.cspace import ProblemSpace, RECT3
from regionplan.harp import HarpConfig
from regionplan.ll_planner import Budget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--env", default="rooms")
    ap.add_argument("--robot", choices=sorted(ROBOTS), default=RECT3)
    ap.add_argument("--problems", type=int, default=20)
    ap.add_argument("--repetitions", type=int, default=10)
    ap.add_argument("--budget", type=float, default=10.0)
    ap.add_argument("--threshold", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/heuristic_curve.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    space = ProblemSpace(bench.resolve_environment(args.env), ROBOTS[args.robot]())
    regions = bench.empirical_regions(space, threshold=args.threshold, seed=args.seed, environment=args.env)
    cfg = HarpConfig(budget=Budget(seconds=args.budget), seed=args.seed)
    curves = bench.run_heuristic_curve(space, regions, args.problems, args.repetitions, config=cfg, seed=args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(bench.curves_to_csv(curves))
    for c in curves:
        print(c.mode, " ".join(f"{t:.3f}" for t in c.mean_seconds))


if __name__ == "__main__":
    main()
