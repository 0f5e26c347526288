"""Hierarchical abstraction-guided planning.

A query is answered in four moves: classify start and goal into abstract
states, search the abstract graph for candidate plans, refine with the
multi-tree planner seeded from the regions on those plans, and shrink the
heuristic weights along the abstract trajectory of the solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .abstraction import AbstractGraph, SampleIndex, abstract_trajectory
from .critical_regions import CriticalRegion
from .cspace import ContractError, MotionPlanningProblem, ProblemSpace, Trajectory, validate_trajectory
from .hl_search import HeuristicTable, HighLevelPlan, ms_bidirectional_beam_search, rooted_plans, update_heuristic
from .ll_planner import Budget, PlanStats, llp_plan


@dataclass
class HarpConfig:
    beam_width: int = 20
    n_plans: int = 5
    n_sources: int | None = None
    n_trees: int = 12
    cr_seeds: int = 6
    cr_fraction: float = 0.25
    budget: Budget = field(default_factory=lambda: Budget(seconds=10.0))
    probes: int = 32
    seed: int = 0
    # keep every refinement node inside the states of one candidate plan
    confine: bool = False
    update: bool = True

    def __post_init__(self):
        for name in ("beam_width", "n_plans", "n_trees", "probes"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive")
        if not 0 <= self.cr_seeds <= self.n_trees:
            raise ContractError("cr_seeds must lie in [0, n_trees]")


@dataclass
class PlannerResult:
    trajectory: Trajectory | None
    stats: PlanStats
    plans: list[HighLevelPlan] = field(default_factory=list)
    abstract: list[int] = field(default_factory=list)
    # the candidate plan the trajectory was confined to, if any
    refined: HighLevelPlan | None = None

    @property
    def success(self) -> bool:
        return self.trajectory is not None

    @property
    def hl_plans(self) -> int:
        return len(self.plans)


class HarpContext:
    """Sample index and neighbor cache for one environment and region set."""

    def __init__(self, space: ProblemSpace, regions: list[CriticalRegion], probes: int = 32, seed: int = 0):
        self.space = space
        self.regions = regions
        self.index = SampleIndex.build(space, regions)
        self.graph = AbstractGraph(space, self.index, probes=probes, seed=seed)
        self.all_samples = np.vstack([r.samples for r in regions])

    def warm(self) -> None:
        """Probe every pair up to the escalation cap and measure every region distance.

        Afterwards the neighbor graph no longer changes, so later queries pay
        no probing and see the same graph regardless of query order.
        """
        ids = sorted(self.graph.states)
        for i in ids:
            self.graph.neighbors(i)
            for j in ids:
                self.graph.region_distance(i, j)
        self.graph.saturate()

    def samples_of(self, states) -> np.ndarray:
        return np.vstack([self.index.regions[s].samples for s in sorted(set(states))])

    def plan_filter(self, plan: HighLevelPlan):
        allowed = np.array(sorted(set(plan.states)))
        return lambda pts: np.isin(self.index.classify_many(pts), allowed)


def _remaining(budget: Budget, t0: float) -> Budget:
    secs = None if budget.seconds is None else max(0.0, budget.seconds - (time.perf_counter() - t0))
    return Budget(seconds=secs, samples=budget.samples)


def _search(ctx: HarpContext, table: HeuristicTable, s0: int, sg: int, cfg: HarpConfig, rng) -> list[HighLevelPlan]:
    plans = ms_bidirectional_beam_search(
        ctx.graph, table, s0, sg, cfg.beam_width, cfg.n_plans, cfg.n_sources, rng, keep_partial=True
    )
    if not rooted_plans(plans, s0) and ctx.graph.escalate():
        plans = ms_bidirectional_beam_search(
            ctx.graph, table, s0, sg, cfg.beam_width, cfg.n_plans, cfg.n_sources, rng, keep_partial=True
        )
    return plans


def harp_plan(
    problem: MotionPlanningProblem,
    regions: list[CriticalRegion],
    table: HeuristicTable | None = None,
    config: HarpConfig | None = None,
    *,
    rng: np.random.Generator | None = None,
    context: HarpContext | None = None,
) -> PlannerResult:
    cfg = config or HarpConfig()
    table = table if table is not None else HeuristicTable()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    space = problem.space
    t0 = time.perf_counter()
    stats = PlanStats()

    def done(traj, plans=(), abstract=(), refined=None):
        if traj is not None and not validate_trajectory(space, traj, problem.start, problem.goal):
            traj = None
        stats.seconds = time.perf_counter() - t0
        return PlannerResult(traj, stats, list(plans), list(abstract), refined if traj is not None else None)

    if not regions:
        # no regions: plain uniform refinement keeps full sampling support
        traj = llp_plan(problem, None, cfg.n_trees, 0, cfg.budget, rng, stats=stats)
        return done(traj)

    ctx = context if context is not None else HarpContext(space, regions, cfg.probes, cfg.seed)
    table.bind(ctx.graph)
    s0 = ctx.index.classify(problem.start)
    sg = ctx.index.classify(problem.goal)
    plans = _search(ctx, table, s0, sg, cfg, rng)
    rooted = rooted_plans(plans, s0)

    traj = None
    refined = None
    if cfg.confine and rooted:
        for plan in rooted:
            budget = _remaining(cfg.budget, t0)
            if budget.seconds is not None and budget.seconds <= 0:
                break
            seeds = ctx.samples_of(plan.states)
            traj = llp_plan(
                problem, seeds, cfg.n_trees, cfg.cr_seeds, budget, rng,
                expand_pool=seeds, cr_fraction=cfg.cr_fraction,
                state_filter=ctx.plan_filter(plan), stats=stats,
            )
            if traj is not None:
                refined = plan
                break
    else:
        states = [s for p in plans for s in p.states] or list(ctx.index.state_ids)
        seeds = ctx.samples_of(states)
        traj = llp_plan(
            problem, seeds, cfg.n_trees, cfg.cr_seeds, _remaining(cfg.budget, t0), rng,
            expand_pool=ctx.all_samples, cr_fraction=cfg.cr_fraction, stats=stats,
        )

    abstract: list[int] = []
    if traj is not None:
        abstract = abstract_trajectory(space, ctx.index, traj)
        if cfg.update:
            update_heuristic(table, abstract)
    return done(traj, plans, abstract, refined)


@dataclass
class RepeatedRun:
    """Per-iteration mean wall time, mean samples, success count and epsilon snapshots."""

    mean_seconds: list[float] = field(default_factory=list)
    mean_samples: list[float] = field(default_factory=list)
    solved: list[int] = field(default_factory=list)
    seconds: list[list[float]] = field(default_factory=list)
    eps: list[list[dict]] = field(default_factory=list)


def solve_repeated(
    problems: list[MotionPlanningProblem],
    repetitions: int,
    shared_table: bool,
    regions: list[CriticalRegion],
    config: HarpConfig | None = None,
    *,
    context: HarpContext | None = None,
    warm: bool = True,
    common_random_numbers: bool = True,
) -> RepeatedRun:
    """Solve every problem ``repetitions`` times while the heuristic learns.

    With ``shared_table`` one table serves all problems; otherwise each problem
    keeps its own. The neighbor cache is warmed first (``warm``) so timing
    differences across iterations come from the heuristic, not from probing.
    With ``common_random_numbers`` every iteration of a problem replays the
    same random stream, so the heuristic is the only thing that changes.
    """
    cfg = config or HarpConfig()
    out = RepeatedRun()
    if repetitions <= 0 or not problems:
        return out
    if regions:
        context = context or HarpContext(problems[0].space, regions, cfg.probes, cfg.seed)
        if warm:
            context.warm()
    shared = HeuristicTable()
    tables = [shared if shared_table else HeuristicTable() for _ in problems]
    for it in range(repetitions):
        times, samples = [], []
        solved = 0
        for k, (problem, table) in enumerate(zip(problems, tables)):
            rng = np.random.default_rng([cfg.seed, k] if common_random_numbers else [cfg.seed, k, it])
            res = harp_plan(problem, regions, table, cfg, rng=rng, context=context)
            times.append(res.stats.seconds)
            samples.append(res.stats.samples)
            solved += res.success
        out.seconds.append(times)
        out.mean_seconds.append(float(np.mean(times)))
        out.mean_samples.append(float(np.mean(samples)))
        out.solved.append(solved)
        out.eps.append([dict(t.eps) for t in ([shared] if shared_table else tables)])
    return out


def moving_average(values, window: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if window < 1 or len(values) == 0:
        raise ContractError("moving average needs a positive window and data")
    c = np.cumsum(np.insert(values, 0, 0.0))
    n = np.arange(1, len(values) + 1)
    lo = np.maximum(0, n - window)
    return (c[n] - c[lo]) / (n - lo)
