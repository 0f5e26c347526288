"""Configuration spaces over 2D occupancy grids.

Configurations are plain 1-D float arrays. Translational DOFs are in meters,
angular DOFs in radians. The DOF layout per robot kind:

    Point2   (x, y)
    Rect3    (x, y, theta)
    Hinged4  (x, y, theta, omega)
    Car3     (x, y, theta)

Grid indexing is ``occupancy[iy, ix]`` with ``iy = 0`` at ``y = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * math.pi

POINT2 = "Point2"
RECT3 = "Rect3"
HINGED4 = "Hinged4"
CAR3 = "Car3"

_DOF = {POINT2: 2, RECT3: 3, HINGED4: 4, CAR3: 3}

CAR_SPEED_LIMIT = 0.2
CAR_STEER_LIMIT = math.pi / 4
HINGE_LIMIT = math.pi / 2


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


def wrap_angle(a):
    """Map angles into [-pi, pi)."""
    return (np.asarray(a) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class Workspace:
    occupancy: np.ndarray
    resolution: float

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != 2 or occ.size == 0:
            raise ContractError("occupancy must be a non-empty 2D grid")
        if not self.resolution > 0:
            raise ContractError("resolution must be positive")
        occ = occ.copy()
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)

    @property
    def width_cells(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height_cells(self) -> int:
        return self.occupancy.shape[0]

    @property
    def width(self) -> float:
        return self.width_cells * self.resolution

    @property
    def height(self) -> float:
        return self.height_cells * self.resolution

    @classmethod
    def empty(cls, width_cells: int, height_cells: int, resolution: float) -> "Workspace":
        return cls(np.zeros((height_cells, width_cells), dtype=bool), resolution)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))


@dataclass(frozen=True)
class RobotModel:
    """Robot geometry and DOF layout.

    ``half_extents`` is the base rectangle (along heading, across heading).
    ``link_half_extents`` is the second link of the hinged robot, attached at
    the front edge of the base and extending forward along ``theta + omega``.
    """

    kind: str
    half_extents: tuple[float, float] = (0.0, 0.0)
    link_half_extents: tuple[float, float] = (0.0, 0.0)
    wheelbase: float = 0.0
    angular_weight: float | None = None

    def __post_init__(self):
        if self.kind not in _DOF:
            raise ContractError(f"unknown robot kind {self.kind!r}")
        if self.kind != POINT2 and min(self.half_extents) <= 0:
            raise ContractError(f"{self.kind} needs positive half extents")
        if self.kind == HINGED4 and min(self.link_half_extents) <= 0:
            raise ContractError("Hinged4 needs positive link half extents")
        if self.kind == CAR3 and self.wheelbase <= 0:
            object.__setattr__(self, "wheelbase", 0.8 * 2.0 * self.half_extents[0])

    @property
    def dof_count(self) -> int:
        return _DOF[self.kind]

    @property
    def angular_mask(self) -> np.ndarray:
        """Flags for DOFs that wrap around (only theta; the hinge is bounded)."""
        mask = np.zeros(self.dof_count, dtype=bool)
        if self.kind != POINT2:
            mask[2] = True
        return mask

    @property
    def rotational_mask(self) -> np.ndarray:
        """Flags for every angular DOF, wrapping or not."""
        mask = np.zeros(self.dof_count, dtype=bool)
        mask[2:] = True
        return mask

    @property
    def link_reach(self) -> float:
        lx, ly = self.link_half_extents
        return math.hypot(2.0 * lx, ly)

    @property
    def bounding_radius(self) -> float:
        hx, hy = self.half_extents
        if self.kind == POINT2:
            return 0.0
        if self.kind == HINGED4:
            return max(math.hypot(hx, hy), hx + self.link_reach)
        return math.hypot(hx, hy)

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(self.dof_count)
        ang = self.angular_weight
        if ang is None:
            ang = 0.5 * self.bounding_radius
        w[2:] = ang
        return w

    @property
    def sweep_reach(self) -> np.ndarray:
        """Per-DOF bound on footprint displacement per unit DOF change."""
        r = np.ones(self.dof_count)
        if self.kind != POINT2:
            r[2] = self.bounding_radius
        if self.kind == HINGED4:
            r[3] = self.link_reach
        return r

    def check_dims(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dof_count:
            raise ContractError(
                f"{self.kind} expects {self.dof_count} DOFs, got {x.shape[-1]}"
            )
        return x

    def normalize(self, x) -> np.ndarray:
        x = np.array(self.check_dims(x), dtype=float)
        if self.kind != POINT2:
            x[..., 2] = wrap_angle(x[..., 2])
        return x

    def delta(self, a, b) -> np.ndarray:
        """Per-DOF difference ``b - a`` with shortest-arc wrapping."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.kind != POINT2:
            d[..., 2] = wrap_angle(d[..., 2])
        return d

    def distances(self, xs, x) -> np.ndarray:
        """Weighted distance from each row of ``xs`` to ``x``."""
        xs = np.atleast_2d(self.check_dims(xs))
        d = self.delta(xs, self.check_dims(x)) * self.weights
        return np.sqrt(np.sum(d * d, axis=-1))

    def distance(self, x1, x2) -> float:
        return float(self.distances(np.asarray(x1, dtype=float)[None, :], x2)[0])

    def sweep(self, a, b) -> float:
        """Upper bound on how far any footprint point moves along segment a-b."""
        d = self.delta(a, b)
        trans = math.hypot(d[0], d[1])
        return trans + float(np.sum(np.abs(d[2:]) * self.sweep_reach[2:]))

    def interpolate(self, a, b, t) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        t = np.asarray(t, dtype=float)
        out = a + np.multiply.outer(t, self.delta(a, b))
        if self.kind != POINT2:
            out[..., 2] = wrap_angle(out[..., 2])
        return out

    def lower_bounds(self, ws: Workspace) -> np.ndarray:
        lo = np.zeros(self.dof_count)
        if self.kind != POINT2:
            lo[2] = -math.pi
        if self.kind == HINGED4:
            lo[3] = -HINGE_LIMIT
        return lo

    def upper_bounds(self, ws: Workspace) -> np.ndarray:
        hi = np.zeros(self.dof_count)
        hi[0], hi[1] = ws.width, ws.height
        if self.kind != POINT2:
            hi[2] = math.pi
        if self.kind == HINGED4:
            hi[3] = HINGE_LIMIT
        return hi

    def rectangles(self, x) -> list[tuple[float, float, float, float, float]]:
        """Footprint as ``(cx, cy, heading, half_len, half_width)`` rectangles."""
        hx, hy = self.half_extents
        cx, cy, th = float(x[0]), float(x[1]), float(x[2])
        rects = [(cx, cy, th, hx, hy)]
        if self.kind == HINGED4:
            lx, ly = self.link_half_extents
            hinge_x = cx + hx * math.cos(th)
            hinge_y = cy + hx * math.sin(th)
            phi = th + float(x[3])
            rects.append(
                (hinge_x + lx * math.cos(phi), hinge_y + lx * math.sin(phi), phi, lx, ly)
            )
        return rects

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != POINT2:
            d["half_extents"] = list(self.half_extents)
        if self.kind == HINGED4:
            d["link_half_extents"] = list(self.link_half_extents)
        if self.kind == CAR3:
            d["wheelbase"] = self.wheelbase
        if self.angular_weight is not None:
            d["angular_weight"] = self.angular_weight
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RobotModel":
        return cls(
            kind=d["kind"],
            half_extents=tuple(d.get("half_extents", (0.0, 0.0))),
            link_half_extents=tuple(d.get("link_half_extents", (0.0, 0.0))),
            wheelbase=float(d.get("wheelbase", 0.0)),
            angular_weight=d.get("angular_weight"),
        )


def point_robot() -> RobotModel:
    return RobotModel(POINT2)


def rect_robot(half_len: float = 0.2, half_width: float = 0.05) -> RobotModel:
    return RobotModel(RECT3, (half_len, half_width))


def hinged_robot(
    base=(0.15, 0.05), link=(0.1, 0.05)
) -> RobotModel:
    return RobotModel(HINGED4, tuple(base), tuple(link))


def car_robot(half_len: float = 0.2, half_width: float = 0.08, wheelbase: float = 0.0) -> RobotModel:
    return RobotModel(CAR3, (half_len, half_width), wheelbase=wheelbase)


def distance(robot: RobotModel, x1, x2) -> float:
    return robot.distance(x1, x2)


@dataclass
class ProblemSpace:
    """A workspace paired with a robot: the configuration space ``X``.

    ``checks`` counts collision queries and is the only mutable state.
    """

    workspace: Workspace
    robot: RobotModel
    checks: int = field(default=0, compare=False)

    def __post_init__(self):
        ws = self.workspace
        padded = np.pad(ws.occupancy, 1, constant_values=True)
        edt = ndimage.distance_transform_edt(~padded)[1:-1, 1:-1]
        # Conservative clearance from any point inside a cell to any occupied cell
        # or the boundary: center-to-center distance minus two half diagonals.
        self._clearance = edt * ws.resolution - ws.resolution * math.sqrt(2.0)
        self._radius = self.robot.bounding_radius
        self._lo = self.robot.lower_bounds(ws)
        self._hi = self.robot.upper_bounds(ws)

    @property
    def default_step(self) -> float:
        return 0.5 * self.workspace.resolution

    @property
    def dof_count(self) -> int:
        return self.robot.dof_count

    def distance(self, x1, x2) -> float:
        return self.robot.distance(x1, x2)

    # -- collision ---------------------------------------------------------

    def collides(self, x) -> bool:
        """Collision function u(x): footprint overlaps an occupied cell or leaves the grid."""
        x = self.robot.check_dims(x)
        if x.ndim != 1:
            raise ContractError("collides takes a single configuration")
        self.checks += 1
        ws = self.workspace
        px, py = float(x[0]), float(x[1])
        if not (0.0 <= px < ws.width and 0.0 <= py < ws.height):
            return True
        ix, iy = int(px / ws.resolution), int(py / ws.resolution)
        if ws.occupancy[iy, ix]:
            return True
        if self.robot.kind == POINT2:
            return False
        if self.robot.kind == HINGED4 and abs(float(x[3])) > HINGE_LIMIT + 1e-12:
            return True
        if self._clearance[iy, ix] > self._radius:
            return False
        return any(_rect_hits_grid(ws, *r) for r in self.robot.rectangles(x))

    def collides_many(self, xs, stop_early: bool = False) -> np.ndarray:
        """Vectorized collision function over rows of ``xs``.

        With ``stop_early`` the exact per-configuration checks stop at the first
        hit, so only ``result.any()`` is meaningful.
        """
        xs = np.atleast_2d(self.robot.check_dims(xs))
        ws = self.workspace
        res = ws.resolution
        px, py = xs[:, 0], xs[:, 1]
        inside = (px >= 0) & (px < ws.width) & (py >= 0) & (py < ws.height)
        out = ~inside
        ix = np.clip((px / res).astype(int), 0, ws.width_cells - 1)
        iy = np.clip((py / res).astype(int), 0, ws.height_cells - 1)
        out |= ws.occupancy[iy, ix]
        if self.robot.kind == POINT2:
            self.checks += len(xs)
            return out
        if self.robot.kind == HINGED4:
            out |= np.abs(xs[:, 3]) > HINGE_LIMIT + 1e-12
        undecided = ~out & ~(self._clearance[iy, ix] > self._radius)
        self.checks += int(len(xs) - undecided.sum())
        if stop_early and out.any():
            return out
        for k in np.flatnonzero(undecided):
            out[k] = self.collides(xs[k])
            if stop_early and out[k]:
                break
        return out

    # -- local planning ----------------------------------------------------

    def segment(self, x1, x2, step: float | None = None) -> np.ndarray:
        """Interpolants from x1 to x2 (inclusive) whose footprint spacing is <= step."""
        step = self.default_step if step is None else step
        if step <= 0:
            raise ContractError("step must be positive")
        n = max(1, int(math.ceil(self.robot.sweep(x1, x2) / step)))
        return self.robot.interpolate(x1, x2, np.linspace(0.0, 1.0, n + 1))

    def local_path_free(self, x1, x2, step: float | None = None) -> bool:
        return not self.collides_many(self.segment(x1, x2, step), stop_early=True).any()

    # -- sampling ----------------------------------------------------------

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self._lo, self._hi)

    def sample_free(self, rng: np.random.Generator, max_tries: int = 10_000) -> np.ndarray:
        for _ in range(max_tries):
            x = self.sample_uniform(rng)
            if not self.collides(x):
                return x
        raise RuntimeError("could not sample a collision-free configuration")


def collision_check(space: ProblemSpace, x) -> bool:
    return space.collides(x)


def local_path_free(space: ProblemSpace, x1, x2, step: float | None = None) -> bool:
    return space.local_path_free(x1, x2, step)


def sample_uniform(space: ProblemSpace, rng: np.random.Generator) -> np.ndarray:
    return space.sample_uniform(rng)


def _rect_hits_grid(ws: Workspace, cx, cy, th, hx, hy) -> bool:
    """Positive-area overlap between a rotated rectangle and any occupied cell."""
    res = ws.resolution
    c, s = abs(math.cos(th)), abs(math.sin(th))
    ex = c * hx + s * hy
    ey = s * hx + c * hy
    if cx - ex < 0.0 or cy - ey < 0.0 or cx + ex > ws.width or cy + ey > ws.height:
        return True
    i0 = int(math.floor((cx - ex) / res))
    j0 = int(math.floor((cy - ey) / res))
    i1 = min(ws.width_cells, int(math.ceil((cx + ex) / res)))
    j1 = min(ws.height_cells, int(math.ceil((cy + ey) / res)))
    block = ws.occupancy[j0:j1, i0:i1]
    if not block.any():
        return False
    jj, ii = np.nonzero(block)
    dx = (ii + i0 + 0.5) * res - cx
    dy = (jj + j0 + 0.5) * res - cy
    ct, st = math.cos(th), math.sin(th)
    half_cell = 0.5 * res * (c + s)
    along = np.abs(dx * ct + dy * st) < hx + half_cell
    across = np.abs(-dx * st + dy * ct) < hy + half_cell
    return bool(np.any(along & across))


def steer_car(robot: RobotModel, x, control, dt: float, substeps: int = 10) -> np.ndarray:
    """Forward-integrate the kinematic bicycle model under constant control.

    Each substep follows the exact circular arc for the constant controls.
    """
    if robot.kind != CAR3:
        raise ContractError("steer_car needs a Car3 robot")
    v, steer = float(control[0]), float(control[1])
    if abs(v) > CAR_SPEED_LIMIT + 1e-12 or abs(steer) > CAR_STEER_LIMIT + 1e-12:
        raise ContractError(f"control {control!r} outside the car's control box")
    px, py, th = (float(a) for a in robot.check_dims(x))
    h = dt / substeps
    omega = v / robot.wheelbase * math.tan(steer)
    for _ in range(substeps):
        if abs(omega) < 1e-12:
            px += v * h * math.cos(th)
            py += v * h * math.sin(th)
        else:
            th_next = th + omega * h
            px += v / omega * (math.sin(th_next) - math.sin(th))
            py -= v / omega * (math.cos(th_next) - math.cos(th))
            th = th_next
    return np.array([px, py, float(wrap_angle(th))])


@dataclass(frozen=True)
class MotionPlanningProblem:
    space: ProblemSpace
    start: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        robot = self.space.robot
        start = robot.normalize(self.start)
        goal = robot.normalize(self.goal)
        if self.space.collides(start):
            raise ContractError("start configuration is in collision")
        if self.space.collides(goal):
            raise ContractError("goal configuration is in collision")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal", goal)


@dataclass
class Trajectory:
    """Piecewise-linear path through C-space; tau(0) and tau(1) are the end waypoints."""

    waypoints: np.ndarray

    def __post_init__(self):
        wp = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        if len(wp) == 1:
            wp = np.vstack([wp, wp])
        self.waypoints = wp

    def __len__(self) -> int:
        return len(self.waypoints)

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def reversed(self) -> "Trajectory":
        return Trajectory(self.waypoints[::-1].copy())

    def length(self, robot: RobotModel) -> float:
        return float(
            sum(robot.distance(a, b) for a, b in zip(self.waypoints[:-1], self.waypoints[1:]))
        )

    def interpolants(self, space: ProblemSpace, step: float | None = None) -> np.ndarray:
        parts = [space.segment(a, b, step)[:-1] for a, b in zip(self.waypoints[:-1], self.waypoints[1:])]
        parts.append(self.waypoints[-1:])
        return np.vstack(parts)

    def at(self, robot: RobotModel, t: float) -> np.ndarray:
        """Evaluate tau(t), parameterized by cumulative distance."""
        seg = np.array(
            [robot.distance(a, b) for a, b in zip(self.waypoints[:-1], self.waypoints[1:])]
        )
        total = seg.sum()
        if total == 0.0:
            return self.waypoints[0].copy()
        target = min(max(t, 0.0), 1.0) * total
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        k = min(int(np.searchsorted(cum, target, side="right")) - 1, len(seg) - 1)
        local = 0.0 if seg[k] == 0 else (target - cum[k]) / seg[k]
        return robot.interpolate(self.waypoints[k], self.waypoints[k + 1], local)

    def contains(self, robot: RobotModel, x, tol: float = 1e-6) -> bool:
        """True iff some tau(t) lies within ``tol`` of x."""
        x = np.asarray(x, dtype=float)
        for a, b in zip(self.waypoints[:-1], self.waypoints[1:]):
            d = robot.delta(a, b) * robot.weights
            r = robot.delta(a, x) * robot.weights
            dd = float(d @ d)
            t = 0.0 if dd == 0 else min(max(float(r @ d) / dd, 0.0), 1.0)
            if robot.distance(robot.interpolate(a, b, t), x) <= tol:
                return True
        return False


def validate_trajectory(
    space: ProblemSpace, traj: Trajectory, start=None, goal=None, step: float | None = None
) -> bool:
    """Endpoints exact and every interpolant collision-free at ``step``."""
    if start is not None and not np.array_equal(traj.start, np.asarray(start, dtype=float)):
        return False
    if goal is not None and not np.array_equal(traj.end, np.asarray(goal, dtype=float)):
        return False
    return not space.collides_many(traj.interpolants(space, step), stop_early=True).any()


class ConfigLattice:
    """Cell centers over workspace cells times angle bins, with free-space labels.

    The heading axis wraps; component labels merge across it. The lattice is
    a discretized stand-in for C-space connectivity, used for solvability
    filters and connectivity checks.
    """

    def __init__(self, space: ProblemSpace, angle_bins: int = 8, hinge_bins: int = 3, cell: float | None = None):
        robot = space.robot
        ws = space.workspace
        self.cell = ws.resolution if cell is None else cell
        nx, ny = int(round(ws.width / self.cell)), int(round(ws.height / self.cell))
        axes = [(np.arange(nx) + 0.5) * self.cell, (np.arange(ny) + 0.5) * self.cell]
        self.angle_bins = angle_bins
        self.hinge_bins = hinge_bins
        if robot.dof_count > 2:
            axes.append(-math.pi + np.arange(angle_bins) * (TWO_PI / angle_bins))
        if robot.dof_count > 3:
            w = 2 * HINGE_LIMIT / hinge_bins
            axes.append(-HINGE_LIMIT + (np.arange(hinge_bins) + 0.5) * w)
        mesh = np.meshgrid(*axes, indexing="ij")
        self.shape = mesh[0].shape
        self.configs = np.stack([m.ravel() for m in mesh], axis=1)
        self.free = ~space.collides_many(self.configs).reshape(self.shape)
        self.wraps = robot.dof_count > 2
        self.robot = robot

    def index_of(self, x) -> tuple[int, ...]:
        """Nearest lattice node of a configuration."""
        x = np.asarray(x, dtype=float)
        idx = [int(np.clip(x[k] // self.cell, 0, self.shape[k] - 1)) for k in (0, 1)]
        if len(self.shape) > 2:
            idx.append(int(round((wrap_angle(x[2]) + math.pi) / (TWO_PI / self.angle_bins))) % self.angle_bins)
        if len(self.shape) > 3:
            w = 2 * HINGE_LIMIT / self.hinge_bins
            idx.append(int(np.clip((x[3] + HINGE_LIMIT) // w, 0, self.hinge_bins - 1)))
        return tuple(idx)

    def label(self, mask: np.ndarray | None = None) -> tuple[np.ndarray, int]:
        """Face-connected components of ``mask`` (default: free nodes), merged across the heading wrap."""
        mask = self.free if mask is None else mask
        structure = ndimage.generate_binary_structure(mask.ndim, 1)
        lab, n = ndimage.label(mask, structure=structure)
        if not self.wraps or n <= 1:
            return lab, n
        parent = np.arange(n + 1)

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        first, last = lab[:, :, 0], lab[:, :, -1]
        both = (first > 0) & (last > 0)
        for a, b in zip(first[both], last[both]):
            parent[find(a)] = find(b)
        roots = np.array([find(a) for a in range(n + 1)])
        _, dense = np.unique(roots, return_inverse=True)
        # background stays 0 since root(0) = 0 is the smallest
        return dense[lab], int(dense.max())

    def connected(self, a, b) -> bool:
        """Whether two configurations snap to free nodes of one component."""
        if not hasattr(self, "_labels"):
            self._labels = self.label()[0]
        la, lb = self._labels[self.index_of(a)], self._labels[self.index_of(b)]
        return bool(la and la == lb)
