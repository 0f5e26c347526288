"""Implicit region-based Voronoi abstraction.

The Voronoi partition is never built. A configuration belongs to the abstract
state of the region whose stored samples are nearest (ties go to the lowest
region id). Neighbor relations between states are probed lazily and cached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cspace import CAR3, HINGE_LIMIT, ConfigLattice, ContractError, ProblemSpace, RobotModel, Trajectory
from .critical_regions import CriticalRegion

_TIE_RTOL = 1e-9
_TIE_ATOL = 1e-12


def d_c(robot: RobotModel, x, region: CriticalRegion) -> float:
    """Distance from a configuration to the nearest sample of a region."""
    if len(region.samples) == 0:
        raise ContractError(f"region {region.id} has no samples")
    return float(robot.distances(region.samples, x).min())


def d_r(robot: RobotModel, r1: CriticalRegion, r2: CriticalRegion) -> float:
    """Smallest pairwise sample distance between two regions."""
    if len(r1.samples) == 0 or len(r2.samples) == 0:
        raise ContractError("d_r needs non-empty regions")
    d = robot.delta(r1.samples[:, None, :], r2.samples[None, :, :]) * robot.weights
    return float(np.sqrt(np.sum(d * d, axis=-1)).min())


@dataclass(frozen=True)
class AbstractState:
    id: int
    region: CriticalRegion = field(compare=False, repr=False)


class SampleIndex:
    """All region samples in one kd-tree, tagged with their region id.

    Coordinates are scaled by the distance weights and the heading axis is
    periodic, so Euclidean kd-tree distance equals the C-space distance.
    """

    def __init__(self, robot: RobotModel, regions: list[CriticalRegion], extent: float):
        if not regions:
            raise ContractError("SampleIndex needs at least one region")
        self.robot = robot
        self.regions = {r.id: r for r in regions}
        if len(self.regions) != len(regions):
            raise ContractError("duplicate region ids")
        self.points = np.vstack([r.samples for r in regions])
        self.owner = np.concatenate([np.full(len(r.samples), r.id) for r in regions])
        if len(self.points) == 0:
            raise ContractError("regions carry no samples")
        n = robot.dof_count
        w = robot.weights
        self._shift = np.zeros(n)
        self._scale = w.copy()
        box = np.full(n, 4.0 * extent)
        if n > 2:
            self._shift[2] = math.pi
            box[2] = max(2 * math.pi * w[2], 1e-12)
        if n > 3:
            self._shift[3] = HINGE_LIMIT
            box[3] = max(4 * HINGE_LIMIT * w[3], 1e-12)
        self._box = box
        self._tree = cKDTree(self._scaled(self.points), boxsize=box)

    @classmethod
    def build(cls, space: ProblemSpace, regions: list[CriticalRegion]) -> "SampleIndex":
        ws = space.workspace
        return cls(space.robot, regions, max(ws.width, ws.height))

    @property
    def state_ids(self) -> list[int]:
        return sorted(self.regions)

    def __len__(self) -> int:
        return len(self.points)

    def _scaled(self, xs) -> np.ndarray:
        q = (np.atleast_2d(xs) + self._shift) * self._scale
        return np.mod(q, self._box)

    def classify(self, x) -> int:
        return int(self.classify_many(np.asarray(x, dtype=float)[None, :])[0])

    def classify_many(self, xs) -> np.ndarray:
        """Region id minimizing d_c for each row; exact ties resolve to the lowest id."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        k = min(len(self.points), 4)
        dist, idx = self._tree.query(self._scaled(xs), k=k)
        dist = dist.reshape(len(xs), k)
        idx = idx.reshape(len(xs), k)
        cand_pts = self.points[idx]
        d = self.robot.delta(xs[:, None, :], cand_pts) * self.robot.weights
        exact = np.sqrt(np.sum(d * d, axis=-1))
        best = exact.min(axis=1, keepdims=True)
        big = np.iinfo(np.int64).max
        out = np.where(exact == best, self.owner[idx], big).min(axis=1)
        if k < len(self.points):
            bound = dist[:, 0] * (1 + _TIE_RTOL) + _TIE_ATOL
            for row in np.flatnonzero(dist[:, -1] <= bound):
                # more near-ties than k: widen to every sample within the tie bound
                cand = np.asarray(self._tree.query_ball_point(self._scaled(xs[row])[0], bound[row]))
                ex = self.robot.distances(self.points[cand], xs[row])
                out[row] = self.owner[cand[ex == ex.min()]].min()
        return out.astype(int)


def abstract_state_of(index: SampleIndex, x) -> AbstractState:
    sid = index.classify(x)
    return AbstractState(sid, index.regions[sid])


def abstract_trajectory(space: ProblemSpace, index: SampleIndex, tau: Trajectory, step: float | None = None) -> list[int]:
    """State ids visited along a trajectory, consecutive duplicates collapsed."""
    labels = index.classify_many(tau.interpolants(space, step))
    keep = np.concatenate([[True], labels[1:] != labels[:-1]])
    return [int(v) for v in labels[keep]]


class AbstractGraph:
    """Abstract states with lazily verified, cached neighbor verdicts.

    A pair is probed by sampling one region sample from each side and testing
    the straight segment: it must be collision-free and every interpolant must
    classify into one of the two states. A True verdict is final. A False
    verdict can be re-probed with a larger budget via :meth:`escalate`.
    """

    def __init__(self, space: ProblemSpace, index: SampleIndex, probes: int = 32, seed: int = 0):
        self.space = space
        self.index = index
        self.states = {sid: AbstractState(sid, reg) for sid, reg in index.regions.items()}
        self.probes = probes
        self.seed = seed
        self._verdict: dict[tuple[int, int], bool] = {}
        self._budget: dict[tuple[int, int], int] = {}
        self._dr: dict[tuple[int, int], float] = {}
        self.probe_count = 0

    def __len__(self) -> int:
        return len(self.states)

    @property
    def actions(self) -> set[tuple[int, int]]:
        """Verified abstract actions, both directions."""
        out = set()
        for (i, j), ok in self._verdict.items():
            if ok:
                out.update({(i, j), (j, i)})
        return out

    def verdict(self, i: int, j: int) -> bool | None:
        return self._verdict.get((min(i, j), max(i, j)))

    def region_distance(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        if key not in self._dr:
            self._dr[key] = 0.0 if i == j else d_r(self.space.robot, self.states[i].region, self.states[j].region)
        return self._dr[key]

    def are_neighbors(self, i: int, j: int, probes: int | None = None) -> bool:
        if i == j:
            raise ContractError("a state is not its own neighbor")
        if i not in self.states or j not in self.states:
            raise KeyError(f"unknown state in pair ({i}, {j})")
        key = (min(i, j), max(i, j))
        budget = self.probes if probes is None else probes
        if self._verdict.get(key) is True:
            return True
        if key in self._verdict and self._budget[key] >= budget:
            return False
        ok = self._probe(key, budget)
        self._verdict[key] = ok
        self._budget[key] = budget
        return ok

    def neighbors(self, i: int) -> list[int]:
        return [j for j in sorted(self.states) if j != i and self.are_neighbors(i, j)]

    def escalate(self, cap: int | None = None) -> int:
        """Re-probe every False verdict at twice its previous budget; returns how many flipped.

        Budgets stop growing at ``cap`` (default 16x the base budget), so a
        graph shared across many queries does not pay ever larger probes.
        """
        cap = 16 * self.probes if cap is None else cap
        flipped = 0
        for key, ok in list(self._verdict.items()):
            if ok or self._budget[key] >= cap:
                continue
            if self.are_neighbors(*key, probes=min(cap, 2 * self._budget[key])):
                flipped += 1
        return flipped

    def saturate(self, cap: int | None = None) -> None:
        """Escalate until every False verdict has been probed at ``cap``."""
        cap = 16 * self.probes if cap is None else cap
        while any(not ok and self._budget[k] < cap for k, ok in self._verdict.items()):
            self.escalate(cap)

    def _probe(self, key: tuple[int, int], budget: int) -> bool:
        i, j = key
        a = self.states[i].region.samples
        b = self.states[j].region.samples
        robot = self.space.robot
        d = robot.delta(a[:, None, :], b[None, :, :]) * robot.weights
        flat = np.sqrt(np.sum(d * d, axis=-1)).ravel()
        order = [int(np.argmin(flat))]
        rng = np.random.default_rng([self.seed, i, j])
        order += list(rng.integers(len(flat), size=max(0, budget - 1)))
        allowed = np.array([i, j])
        for pair in order:
            self.probe_count += 1
            xa, xb = a[pair // len(b)], b[pair % len(b)]
            pts = self.space.segment(xa, xb)
            if not np.isin(self.index.classify_many(pts), allowed).all():
                continue
            if not self.space.collides_many(pts, stop_early=True).any():
                return True
        return False


class ConnectivityGrid:
    """Lattice nodes labeled by abstract state.

    Used to verify that an abstract state's free configurations form one
    face-connected component (heading bins wrap around).
    """

    def __init__(self, space: ProblemSpace, index: SampleIndex, angle_bins: int = 8, hinge_bins: int = 3,
                 cell: float | None = None):
        if space.robot.kind == CAR3:
            raise ContractError("strong connectivity is only checked for holonomic robots")
        self.lattice = ConfigLattice(space, angle_bins, hinge_bins, cell)
        free = self.lattice.free.ravel()
        labels = np.full(free.shape, -1)
        labels[free] = index.classify_many(self.lattice.configs[free])
        self.labels = labels.reshape(self.lattice.shape)

    def components(self, sid: int) -> int:
        mask = self.labels == sid
        if not mask.any():
            return 0
        return self.lattice.label(mask)[1]


def check_strong_connectivity(space: ProblemSpace, index: SampleIndex, sid: int,
                              grid: ConnectivityGrid | None = None) -> bool:
    grid = grid or ConnectivityGrid(space, index)
    return grid.components(sid) == 1
