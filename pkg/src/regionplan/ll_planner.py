"""Sampling-based low-level planners.

``llp_plan`` is the multi-tree learn-and-link planner used for refinement:
trees rooted at start, goal, critical-region seeds and uniform samples grow
toward a mixed target distribution until start and goal share a component.
``rrt_plan``, ``birrt_plan`` and ``prm_plan`` are textbook baselines.

Every planner takes a :class:`Budget` and an ``np.random.Generator`` and
returns a :class:`~regionplan.cspace.Trajectory` or ``None``.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cspace import (
    CAR3,
    CAR_SPEED_LIMIT,
    CAR_STEER_LIMIT,
    ContractError,
    MotionPlanningProblem,
    ProblemSpace,
    Trajectory,
    steer_car,
)

StateFilter = Callable[[np.ndarray], np.ndarray]


@dataclass
class Budget:
    """Stop after ``seconds`` of wall time or ``samples`` drawn, whichever first."""

    seconds: float | None = None
    samples: int | None = None

    def __post_init__(self):
        if self.seconds is None and self.samples is None:
            raise ContractError("a budget needs seconds or samples")

    def clock(self) -> "_Clock":
        return _Clock(self)


class _Clock:
    def __init__(self, budget: Budget):
        self.budget = budget
        self.t0 = time.perf_counter()
        self.samples = 0

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def tick(self) -> bool:
        """Count one sample; False once the budget is spent."""
        b = self.budget
        if b.samples is not None and self.samples >= b.samples:
            return False
        if b.seconds is not None and self.elapsed >= b.seconds:
            return False
        self.samples += 1
        return True


@dataclass
class PlanStats:
    samples: int = 0
    checks: int = 0
    nodes: int = 0
    seconds: float = 0.0

    def merge(self, other: "PlanStats") -> None:
        self.samples += other.samples
        self.checks += other.checks
        self.nodes += other.nodes
        self.seconds += other.seconds


class Components:
    """Union-find over node ids, kept as a flat label array (quick-find).

    Merges relabel the smaller side so ``labels`` can be used as a vector mask.
    """

    def __init__(self):
        self._labels = np.zeros(64, dtype=np.int64)
        self._sizes: dict[int, int] = {}
        self.n = 0

    def add(self) -> int:
        if self.n == len(self._labels):
            self._labels = np.concatenate([self._labels, np.zeros_like(self._labels)])
        i = self.n
        self._labels[i] = i
        self._sizes[i] = 1
        self.n += 1
        return i

    @property
    def labels(self) -> np.ndarray:
        return self._labels[: self.n]

    def find(self, i: int) -> int:
        return int(self._labels[i])

    def union(self, a: int, b: int) -> bool:
        la, lb = self.find(a), self.find(b)
        if la == lb:
            return False
        if self._sizes[la] < self._sizes[lb]:
            la, lb = lb, la
        lab = self.labels
        lab[lab == lb] = la
        self._sizes[la] += self._sizes.pop(lb)
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    @property
    def count(self) -> int:
        return len(self._sizes)


class Roadmap:
    """Configurations plus symmetric edges weighted by C-space distance."""

    def __init__(self, dof: int):
        self._x = np.zeros((64, dof))
        self.n = 0
        self.adj: list[dict[int, float]] = []

    def add_vertex(self, x) -> int:
        if self.n == len(self._x):
            self._x = np.vstack([self._x, np.zeros_like(self._x)])
        self._x[self.n] = x
        self.adj.append({})
        self.n += 1
        return self.n - 1

    def add_edge(self, a: int, b: int, w: float) -> None:
        self.adj[a][b] = w
        self.adj[b][a] = w

    @property
    def vertices(self) -> np.ndarray:
        return self._x[: self.n]

    def __getitem__(self, i: int) -> np.ndarray:
        return self._x[i]


def dijkstra(roadmap: Roadmap, start: int, goal: int) -> list[int] | None:
    """Minimum-weight vertex path, or None when goal is unreachable."""
    dist = {start: 0.0}
    prev: dict[int, int] = {}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == goal:
            path = [u]
            while u in prev:
                u = prev[u]
                path.append(u)
            return path[::-1]
        done.add(u)
        for v, w in roadmap.adj[u].items():
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    return None


def _steer(space: ProblemSpace, a: np.ndarray, b: np.ndarray, step: float) -> np.ndarray:
    d = space.robot.distance(a, b)
    if d <= step:
        return np.array(b, dtype=float)
    return space.robot.interpolate(a, b, step / d)


def _edge_ok(space: ProblemSpace, a, b, state_filter: StateFilter | None) -> bool:
    if state_filter is None:
        return space.local_path_free(a, b)
    pts = space.segment(a, b)
    if not np.all(state_filter(pts)):
        return False
    return not space.collides_many(pts, stop_early=True).any()


def _finish(problem, roadmap, path, stats, clock, checks0) -> Trajectory | None:
    if stats is not None:
        stats.samples += clock.samples
        stats.checks += problem.space.checks - checks0
        stats.nodes += roadmap.n
        stats.seconds += clock.elapsed
    if path is None:
        return None
    wp = roadmap.vertices[path].copy()
    wp[0], wp[-1] = problem.start, problem.goal
    return Trajectory(wp)


class MixedSampler:
    """Draws expansion targets: a fixed fraction near critical-region samples, the rest uniform.

    The uniform share is always positive, so no free cell loses sampling support.
    ``record`` collects every draw when set to a list.
    """

    def __init__(
        self,
        space: ProblemSpace,
        pool: np.ndarray | None,
        cr_fraction: float = 0.25,
        jitter: float | None = None,
        record: list | None = None,
    ):
        if not 0.0 <= cr_fraction < 1.0:
            raise ContractError("cr_fraction must be in [0, 1)")
        self.space = space
        self.pool = None if pool is None or len(pool) == 0 else np.asarray(pool, dtype=float)
        self.cr_fraction = cr_fraction if self.pool is not None else 0.0
        res = space.workspace.resolution
        self.jitter = res if jitter is None else jitter
        self.record = record

    @property
    def uniform_fraction(self) -> float:
        return 1.0 - self.cr_fraction

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.pool is not None and rng.random() < self.cr_fraction:
            x = self.pool[rng.integers(len(self.pool))].copy()
            x[:2] += rng.uniform(-self.jitter, self.jitter, size=2)
            if len(x) > 2:
                x[2:] += rng.uniform(-math.pi / 32, math.pi / 32, size=len(x) - 2)
            x = self.space.robot.normalize(x)
        else:
            x = self.space.sample_uniform(rng)
        if self.record is not None:
            self.record.append(x)
        return x


def _sample_free_filtered(space, rng, state_filter, tries=200):
    for _ in range(tries):
        x = space.sample_uniform(rng)
        if space.collides(x):
            continue
        if state_filter is None or state_filter(x[None, :])[0]:
            return x
    return None


def llp_plan(
    problem: MotionPlanningProblem,
    seeds: Sequence | np.ndarray | None,
    n_trees: int,
    cr_seed_count: int,
    budget: Budget,
    rng: np.random.Generator,
    *,
    expand_pool: np.ndarray | None = None,
    cr_fraction: float = 0.25,
    step: float | None = None,
    state_filter: StateFilter | None = None,
    stats: PlanStats | None = None,
    sampler: MixedSampler | None = None,
) -> Trajectory | None:
    """Multi-tree planner seeded from critical regions.

    ``n_trees`` counts every root including start and goal; ``cr_seed_count`` of
    the remaining roots come from ``seeds``, the rest are uniform. Expansion
    targets are drawn from ``expand_pool`` (defaults to ``seeds``) with
    probability ``cr_fraction``, otherwise uniformly. ``state_filter`` restricts
    every node and edge interpolant to configurations it accepts.
    """
    space = problem.space
    if space.robot.kind == CAR3:
        raise ContractError("llp_plan links trees with reversible segments; use rrt_plan for Car3")
    if cr_seed_count > n_trees:
        raise ContractError("cr_seed_count must not exceed n_trees")
    seeds = None if seeds is None or len(seeds) == 0 else np.asarray(seeds, dtype=float)
    if seeds is None:
        cr_seed_count = 0
    step = 4.0 * space.workspace.resolution if step is None else step
    clock = budget.clock()
    checks0 = space.checks
    roadmap = Roadmap(space.dof_count)
    comps = Components()

    def add(x) -> int:
        comps.add()
        return roadmap.add_vertex(x)

    s = add(problem.start)
    g = add(problem.goal)
    if np.array_equal(problem.start, problem.goal) or _edge_ok(space, problem.start, problem.goal, state_filter):
        if not np.array_equal(problem.start, problem.goal):
            roadmap.add_edge(s, g, space.distance(problem.start, problem.goal))
        return _finish(problem, roadmap, [s, g], stats, clock, checks0)

    for k in range(cr_seed_count):
        x = seeds[rng.integers(len(seeds))]
        if space.collides(x) or (state_filter is not None and not state_filter(x[None, :])[0]):
            continue
        add(x)
    for _ in range(max(0, n_trees - 2 - cr_seed_count)):
        x = _sample_free_filtered(space, rng, state_filter)
        if x is not None:
            add(x)

    pool = seeds if expand_pool is None else expand_pool
    sampler = sampler or MixedSampler(space, pool, cr_fraction)
    link_radius = 2.0 * step
    robot = space.robot

    while clock.tick():
        target = sampler.draw(rng)
        d = robot.distances(roadmap.vertices, target)
        near = int(np.argmin(d))
        x_new = _steer(space, roadmap[near], target, step)
        if not _edge_ok(space, roadmap[near], x_new, state_filter):
            continue
        v = add(x_new)
        roadmap.add_edge(near, v, robot.distance(roadmap[near], x_new))
        comps.union(near, v)
        # try to link the new node with every other tree that comes within reach
        d = robot.distances(roadmap.vertices, x_new)
        labels = comps.labels
        tried: set[int] = set()
        close = np.flatnonzero(d <= link_radius)
        for u in close[np.argsort(d[close])]:
            lab = int(labels[u])
            if lab == comps.find(v) or lab in tried:
                continue
            tried.add(lab)
            if _edge_ok(space, roadmap[u], x_new, state_filter):
                roadmap.add_edge(int(u), v, float(d[u]))
                comps.union(int(u), v)
                labels = comps.labels
        if comps.connected(s, g):
            return _finish(problem, roadmap, dijkstra(roadmap, s, g), stats, clock, checks0)
    return _finish(problem, roadmap, None, stats, clock, checks0)


def rrt_plan(
    problem: MotionPlanningProblem,
    budget: Budget,
    rng: np.random.Generator,
    *,
    step: float | None = None,
    goal_bias: float = 0.05,
    stats: PlanStats | None = None,
    control_samples: int = 8,
    control_dt: float = 1.0,
    goal_tolerance: float | None = None,
) -> Trajectory | None:
    """Single-tree RRT. Car3 robots extend by sampling controls of the bicycle model."""
    space = problem.space
    robot = space.robot
    step = 4.0 * space.workspace.resolution if step is None else step
    clock = budget.clock()
    checks0 = space.checks
    roadmap = Roadmap(space.dof_count)
    parent: dict[int, int] = {}
    roadmap.add_vertex(problem.start)
    car = robot.kind == CAR3
    tol = (step if goal_tolerance is None else goal_tolerance)
    if not car and space.local_path_free(problem.start, problem.goal):
        v = roadmap.add_vertex(problem.goal)
        return _finish(problem, roadmap, [0, v], stats, clock, checks0)

    while clock.tick():
        target = problem.goal if rng.random() < goal_bias else space.sample_uniform(rng)
        near = int(np.argmin(robot.distances(roadmap.vertices, target)))
        if car:
            chain = _car_extend(space, roadmap[near], target, rng, control_samples, control_dt)
            if chain is None:
                continue
            u = near
            for x in chain:
                v = roadmap.add_vertex(x)
                parent[v] = u
                u = v
            x_new = chain[-1]
        else:
            x_new = _steer(space, roadmap[near], target, step)
            if not space.local_path_free(roadmap[near], x_new):
                continue
            v = roadmap.add_vertex(x_new)
            parent[v] = near
        if robot.distance(x_new, problem.goal) <= tol and space.local_path_free(x_new, problem.goal):
            g = roadmap.add_vertex(problem.goal)
            parent[g] = v
            path = [g]
            while path[-1] in parent:
                path.append(parent[path[-1]])
            return _finish(problem, roadmap, path[::-1], stats, clock, checks0)
    return _finish(problem, roadmap, None, stats, clock, checks0)


def _car_extend(space, x, target, rng, n_controls, dt, substeps=4):
    """Best of ``n_controls`` random constant controls; returns the collision-free substep chain."""
    robot = space.robot
    best, best_d = None, math.inf
    for _ in range(n_controls):
        u = (rng.uniform(-CAR_SPEED_LIMIT, CAR_SPEED_LIMIT), rng.uniform(-CAR_STEER_LIMIT, CAR_STEER_LIMIT))
        chain, prev, ok = [], x, True
        for _ in range(substeps):
            nxt = steer_car(robot, prev, u, dt / substeps)
            if not space.local_path_free(prev, nxt):
                ok = False
                break
            chain.append(nxt)
            prev = nxt
        if not ok:
            continue
        d = robot.distance(chain[-1], target)
        if d < best_d:
            best, best_d = chain, d
    return best


def birrt_plan(
    problem: MotionPlanningProblem,
    budget: Budget,
    rng: np.random.Generator,
    *,
    step: float | None = None,
    stats: PlanStats | None = None,
) -> Trajectory | None:
    """Bidirectional RRT-Connect (holonomic robots only)."""
    space = problem.space
    robot = space.robot
    if robot.kind == CAR3:
        raise ContractError("birrt_plan needs a holonomic robot")
    step = 4.0 * space.workspace.resolution if step is None else step
    clock = budget.clock()
    checks0 = space.checks
    roadmap = Roadmap(space.dof_count)
    trees = [[roadmap.add_vertex(problem.start)], [roadmap.add_vertex(problem.goal)]]
    parent: dict[int, int] = {}
    if space.local_path_free(problem.start, problem.goal):
        return _finish(problem, roadmap, [0, 1], stats, clock, checks0)

    def extend(tree, target):
        idx = np.asarray(tree)
        near = int(idx[np.argmin(robot.distances(roadmap.vertices[idx], target))])
        x_new = _steer(space, roadmap[near], target, step)
        if not space.local_path_free(roadmap[near], x_new):
            return None
        v = roadmap.add_vertex(x_new)
        parent[v] = near
        tree.append(v)
        return v

    def branch(v):
        out = [v]
        while out[-1] in parent:
            out.append(parent[out[-1]])
        return out

    a, b = 0, 1
    while clock.tick():
        v = extend(trees[a], space.sample_uniform(rng))
        if v is not None:
            target = roadmap[v].copy()
            while True:
                w = extend(trees[b], target)
                if w is None:
                    break
                if robot.distance(roadmap[w], target) == 0.0:
                    left, right = branch(v), branch(w)
                    path = left[::-1] + right[1:]
                    if a == 1:
                        path = path[::-1]
                    return _finish(problem, roadmap, path, stats, clock, checks0)
        a, b = b, a
    return _finish(problem, roadmap, None, stats, clock, checks0)


def prm_plan(
    problem: MotionPlanningProblem,
    budget: Budget,
    rng: np.random.Generator,
    *,
    batch: int = 50,
    neighbors: int = 10,
    radius: float | None = None,
    stats: PlanStats | None = None,
) -> Trajectory | None:
    """Incremental PRM: add free samples in batches, connect k-nearest, query with Dijkstra."""
    space = problem.space
    robot = space.robot
    if robot.kind == CAR3:
        raise ContractError("prm_plan needs a holonomic robot")
    radius = 20.0 * space.workspace.resolution if radius is None else radius
    clock = budget.clock()
    checks0 = space.checks
    roadmap = Roadmap(space.dof_count)
    comps = Components()

    def insert(x):
        v = roadmap.add_vertex(x)
        comps.add()
        d = robot.distances(roadmap.vertices[:v], x) if v else np.array([])
        for u in np.argsort(d)[:neighbors]:
            if d[u] > radius:
                break
            if comps.connected(int(u), v) and len(roadmap.adj[v]) > 0:
                continue
            if space.local_path_free(roadmap[u], x):
                roadmap.add_edge(int(u), v, float(d[u]))
                comps.union(int(u), v)
        return v

    s = insert(problem.start)
    g = insert(problem.goal)
    while not comps.connected(s, g):
        added = 0
        while added < batch:
            if not clock.tick():
                return _finish(problem, roadmap, None, stats, clock, checks0)
            x = space.sample_uniform(rng)
            if space.collides(x):
                continue
            insert(x)
            added += 1
            if comps.connected(s, g):
                break
    return _finish(problem, roadmap, dijkstra(roadmap, s, g), stats, clock, checks0)


PLANNERS = {"rrt": rrt_plan, "birrt": birrt_plan, "prm": prm_plan}
