"""Benchmark harness: success-vs-budget curves and heuristic-learning curves.

Each (environment, budget) point draws its own pool of solvable queries.
Every planner at that point sees the same pool, so comparisons are paired.
All randomness derives from one integer seed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import envgen
from .critical_regions import CriticalRegion, estimate_criticality, extract_regions, generate_corpus, load_regions
from .cspace import ConfigLattice, MotionPlanningProblem, ProblemSpace, RobotModel, Workspace, validate_trajectory
from .harp import HarpConfig, HarpContext, harp_plan, moving_average, solve_repeated
from .hl_search import HeuristicTable
from .io import load_environment
from .ll_planner import PLANNERS, Budget, PlanStats, birrt_plan, llp_plan

log = logging.getLogger(__name__)

PLANNER_NAMES = ("harp", "llp", "rrt", "birrt", "prm")


@dataclass
class ExperimentSpec:
    environments: list[str]
    robot: RobotModel
    planners: list[str] = field(default_factory=lambda: ["harp", "rrt", "prm"])
    queries: int = 100
    budgets: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0, 10.0, 30.0])
    budget_kind: str = "seconds"
    seed: int = 0
    regions: dict[str, list[CriticalRegion]] = field(default_factory=dict)
    resolution: float = 0.05
    output: str | None = None
    harp: HarpConfig = field(default_factory=HarpConfig)
    max_query_tries: int = 1000

    def __post_init__(self):
        if self.queries < 1:
            raise ValueError("queries must be >= 1")
        if any(b <= a for a, b in zip(self.budgets, self.budgets[1:])):
            raise ValueError("budgets must be strictly increasing")
        if self.budget_kind not in ("seconds", "samples"):
            raise ValueError("budget_kind is 'seconds' or 'samples'")
        unknown = set(self.planners) - set(PLANNER_NAMES)
        if unknown:
            raise ValueError(f"unknown planners: {sorted(unknown)}")

    def budget(self, value: float) -> Budget:
        if self.budget_kind == "seconds":
            return Budget(seconds=float(value))
        return Budget(samples=int(value))


@dataclass
class ResultRow:
    planner: str
    environment: str
    budget: float
    solved: int
    queries: int
    mean_time: float
    mean_samples: float
    seed: int

    @property
    def fraction(self) -> float:
        return self.solved / self.queries if self.queries else 0.0


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)
    budget_kind: str = "seconds"
    # per-query successes with trajectories, kept for revalidation audits
    successes: list = field(default_factory=list, repr=False)

    def fractions(self, planner: str, environment: str | None = None) -> list[float]:
        return [r.fraction for r in self.rows
                if r.planner == planner and (environment is None or r.environment == environment)]

    def columns(self) -> list[str]:
        cols = ["planner", "environment", "budget", "solved", "queries", "fraction", "mean_samples", "seed"]
        if self.budget_kind == "seconds":
            cols.insert(6, "mean_time")
        return cols


def resolve_environment(name: str, resolution: float = 0.05) -> Workspace:
    """A generator name (``doorway``, ``rooms``, ...) or a path to a grid file."""
    if name in envgen.GENERATORS:
        return envgen.GENERATORS[name](resolution=resolution)
    return load_environment(name, resolution)


def random_queries(space: ProblemSpace, n: int, rng: np.random.Generator, max_tries: int = 1000,
                   lattice: ConfigLattice | None = None) -> list[MotionPlanningProblem]:
    """Collision-free start/goal pairs that the discretized lattice deems connected."""
    lattice = lattice or ConfigLattice(space)
    out = []
    tries = 0
    while len(out) < n:
        if tries >= max_tries * n:
            log.warning("gave up after %d draws with %d/%d solvable queries", tries, len(out), n)
            break
        tries += 1
        a, b = space.sample_free(rng), space.sample_free(rng)
        if lattice.connected(a, b):
            out.append(MotionPlanningProblem(space, a, b))
    return out


def empirical_regions(space: ProblemSpace, goals: int = 30, starts: int = 4, threshold: float = 0.1,
                      seed: int = 0, budget: Budget | None = None, samples_per_region: int = 30,
                      min_cells: int = 2, environment: str = "env") -> list[CriticalRegion]:
    """Corpus of BiRRT plans, criticality per cell, thresholded regions.

    The default budget counts samples, not seconds, so the regions do not
    depend on machine speed.
    """
    rng = np.random.default_rng([seed, 101])
    corpus = generate_corpus(space, goals, starts, birrt_plan, rng, budget=budget or Budget(samples=5000),
                             environment=environment)
    field_ = estimate_criticality(corpus, space)
    return extract_regions(field_, space, threshold, min_cells, samples_per_region, rng)


def run_planner(name: str, problem: MotionPlanningProblem, budget: Budget, rng: np.random.Generator,
                regions: list[CriticalRegion] | None = None, context: HarpContext | None = None,
                harp_config: HarpConfig | None = None):
    """Run one registered planner; returns (trajectory or None, PlanStats)."""
    stats = PlanStats()
    if name == "harp":
        cfg = harp_config or HarpConfig()
        cfg = HarpConfig(**{**cfg.__dict__, "budget": budget})
        res = harp_plan(problem, regions or [], HeuristicTable(), cfg, rng=rng, context=context)
        return res.trajectory, res.stats
    if name == "llp":
        n_trees = (harp_config or HarpConfig()).n_trees
        traj = llp_plan(problem, None, n_trees, 0, budget, rng, stats=stats)
    else:
        traj = PLANNERS[name](problem, budget, rng, stats=stats)
    if traj is not None and not validate_trajectory(problem.space, traj, problem.start, problem.goal):
        traj = None
    return traj, stats


def _point_task(args):
    spec, env_idx, budget_idx, planner, keep = args
    env = spec.environments[env_idx]
    space = ProblemSpace(resolve_environment(env, spec.resolution), spec.robot)
    qrng = np.random.default_rng([spec.seed, env_idx, budget_idx])
    queries = random_queries(space, spec.queries, qrng, spec.max_query_tries)
    regions = spec.regions.get(env, [])
    context = None
    if planner == "harp" and regions:
        # abstraction setup is per-environment preprocessing, done before any query clock starts
        context = HarpContext(space, regions, spec.harp.probes, spec.seed)
        context.warm()
    budget = spec.budget(spec.budgets[budget_idx])
    p_idx = PLANNER_NAMES.index(planner)
    solved, times, samples, kept = 0, [], [], []
    for q_idx, problem in enumerate(queries):
        rng = np.random.default_rng([spec.seed, env_idx, budget_idx, p_idx, q_idx])
        traj, stats = run_planner(planner, problem, budget, rng, regions, context, spec.harp)
        times.append(stats.seconds)
        samples.append(stats.samples)
        if traj is not None:
            solved += 1
            if keep:
                kept.append((planner, problem.start, problem.goal, traj))
    row = ResultRow(planner, env, spec.budgets[budget_idx], solved, len(queries),
                    float(np.mean(times)) if times else 0.0, float(np.mean(samples)) if samples else 0.0, spec.seed)
    return row, kept


def run_success_curve(spec: ExperimentSpec, jobs: int = 1, keep_trajectories: bool = False) -> ResultTable:
    tasks = [
        (spec, e, b, p, keep_trajectories)
        for e in range(len(spec.environments))
        for b in range(len(spec.budgets))
        for p in spec.planners
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_point_task, tasks))
    else:
        results = [_point_task(t) for t in tasks]
    table = ResultTable(budget_kind=spec.budget_kind)
    for row, kept in results:
        table.rows.append(row)
        table.successes.extend(kept)
    return table


@dataclass
class HeuristicCurve:
    mode: str
    mean_seconds: list[float]
    solved: list[int]
    smoothed: list[float] = field(default_factory=list)


def run_heuristic_curve(
    space: ProblemSpace,
    regions: list[CriticalRegion],
    problems: int = 20,
    repetitions: int = 10,
    modes: tuple[str, ...] = ("per-problem", "shared"),
    config: HarpConfig | None = None,
    seed: int = 0,
    window: int = 10,
) -> list[HeuristicCurve]:
    """Per-iteration mean solve time for each heuristic-table mode."""
    queries = random_queries(space, problems, np.random.default_rng([seed, 7]))
    cfg = config or HarpConfig(seed=seed)
    context = HarpContext(space, regions, cfg.probes, cfg.seed) if regions else None
    out = []
    for mode in modes:
        run = solve_repeated(queries, repetitions, mode == "shared", regions, cfg, context=context)
        smooth = moving_average(run.mean_seconds, window).tolist() if run.mean_seconds else []
        out.append(HeuristicCurve(mode, run.mean_seconds, run.solved, smooth))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(v, 9))
    return str(v)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = table.columns()
    writer.writerow(cols)
    for r in table.rows:
        values = {**asdict(r), "fraction": r.fraction}
        writer.writerow([_fmt(values[c]) for c in cols])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for r in rows:
        for key in ("budget", "fraction", "mean_time", "mean_samples"):
            if key in r:
                r[key] = float(r[key])
        for key in ("solved", "queries", "seed"):
            r[key] = int(r[key])
    return rows


def table_to_json(table: ResultTable) -> str:
    cols = table.columns()
    rows = [{c: {**asdict(r), "fraction": r.fraction}[c] for c in cols} for r in table.rows]
    return json.dumps({"budget_kind": table.budget_kind, "rows": rows}, indent=2, sort_keys=True) + "\n"


def table_to_gnuplot(table: ResultTable) -> str:
    lines = []
    for key in sorted({(r.planner, r.environment) for r in table.rows}):
        lines.append(f"# {key[0]} {key[1]}")
        lines += [f"{_fmt(r.budget)} {_fmt(r.fraction)}" for r in table.rows if (r.planner, r.environment) == key]
        lines += ["", ""]
    return "\n".join(lines)


def emit(table: ResultTable, path, formats=("csv", "json")) -> list[Path]:
    """Write the table next to ``path`` in each format; timing goes to a sidecar for sample budgets."""
    base = Path(path)
    stem = base.with_suffix("")
    written = []
    render = {"csv": table_to_csv, "json": table_to_json, "dat": table_to_gnuplot}
    for fmt in formats:
        target = stem.with_suffix("." + fmt)
        try:
            target.write_text(render[fmt](table))
        except OSError as exc:
            raise OSError(f"cannot write {target}: {exc}") from exc
        written.append(target)
    if table.budget_kind == "samples" and table.rows:
        sidecar = stem.with_name(stem.name + ".timing.json")
        data = [{"planner": r.planner, "environment": r.environment, "budget": r.budget, "mean_time": r.mean_time}
                for r in table.rows]
        sidecar.write_text(json.dumps(data, indent=2) + "\n")
        written.append(sidecar)
    return written


def curves_to_csv(curves: list[HeuristicCurve]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["mode", "iteration", "mean_seconds", "moving_average", "solved"])
    for c in curves:
        for i, (t, s) in enumerate(zip(c.mean_seconds, c.solved), 1):
            writer.writerow([c.mode, i, _fmt(t), _fmt(c.smoothed[i - 1]), s])
    return buf.getvalue()


def load_region_map(pairs: list[str]) -> dict[str, list[CriticalRegion]]:
    """Parse ``env=regions.json`` pairs."""
    out = {}
    for item in pairs:
        env, _, path = item.partition("=")
        if not path:
            raise ValueError(f"expected env=path, got {item!r}")
        out[env] = load_regions(path)
    return out


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)
