import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from shapely.geometry import Polygon, box

from regionplan.cspace import (
    ContractError,
    ProblemSpace,
    RobotModel,
    Trajectory,
    Workspace,
    car_robot,
    collision_check,
    distance,
    hinged_robot,
    local_path_free,
    point_robot,
    rect_robot,
    sample_uniform,
    steer_car,
    validate_trajectory,
    wrap_angle,
)


def footprint_hits_oracle(ws, robot, x):
    """Polygon clipping: any occupied cell with positive-area overlap, or out of bounds."""
    polys = []
    for cx, cy, th, hx, hy in robot.rectangles(x):
        c, s = math.cos(th), math.sin(th)
        corners = [
            (cx + c * a - s * b, cy + s * a + c * b)
            for a, b in [(hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)]
        ]
        polys.append(Polygon(corners))
    bounds = box(0, 0, ws.width, ws.height)
    r = ws.resolution
    for poly in polys:
        if poly.difference(bounds).area > 1e-12:
            return True
        for iy, ix in zip(*np.nonzero(ws.occupancy)):
            if poly.intersection(box(ix * r, iy * r, (ix + 1) * r, (iy + 1) * r)).area > 1e-12:
                return True
    return False


def wall_with_gap(gap_cells=1):
    occ = np.zeros((20, 20), dtype=bool)
    occ[10, :] = True
    occ[10, 10 : 10 + gap_cells] = False
    return Workspace(occ, 0.1)


def test_point_free_and_occupied():
    ws = Workspace.empty(10, 10, 1.0)
    sp = ProblemSpace(ws, point_robot())
    assert not collision_check(sp, [5.0, 5.0])
    occ = np.zeros((10, 10), dtype=bool)
    occ[3, 7] = True
    sp = ProblemSpace(Workspace(occ, 1.0), point_robot())
    assert collision_check(sp, [7.5, 3.5])
    assert not collision_check(sp, [6.9, 3.5])


def test_out_of_bounds_collides(open_point_space):
    assert collision_check(open_point_space, [-0.01, 1.0])
    assert collision_check(open_point_space, [10.0, 1.0])


def test_dimension_mismatch_raises(open_point_space):
    with pytest.raises(ContractError):
        collision_check(open_point_space, [1.0, 2.0, 3.0])
    with pytest.raises(ContractError):
        distance(point_robot(), [0, 0], [0, 0, 0])


def test_rect_diagonal_through_narrow_gap():
    ws = wall_with_gap(1)
    robot = rect_robot(0.08, 0.03)
    sp = ProblemSpace(ws, robot)
    x = np.array([1.05, 1.05, math.pi / 4])
    assert footprint_hits_oracle(ws, robot, x)
    assert collision_check(sp, x)


@pytest.mark.parametrize("robot", [rect_robot(0.15, 0.04), hinged_robot(), car_robot()])
def test_footprint_matches_polygon_oracle(robot):
    occ = np.zeros((16, 16), dtype=bool)
    occ[8, 3:13] = True
    occ[3:6, 11] = True
    ws = Workspace(occ, 0.1)
    sp = ProblemSpace(ws, robot)
    rng = np.random.default_rng(7)
    for _ in range(150):
        x = sp.sample_uniform(rng)
        assert sp.collides(x) == footprint_hits_oracle(ws, robot, x), x


def test_collides_many_matches_scalar(doorway_rect_space, rng):
    xs = np.array([doorway_rect_space.sample_uniform(rng) for _ in range(500)])
    expected = np.array([doorway_rect_space.collides(x) for x in xs])
    assert np.array_equal(doorway_rect_space.collides_many(xs), expected)


def test_distance_examples():
    x = np.array([0.3, 0.4])
    assert distance(point_robot(), x, x) == 0.0
    assert distance(point_robot(), [0, 0], [3, 4]) == 5.0
    robot = RobotModel("Rect3", (0.2, 0.05), angular_weight=1.0)
    a, b = [0, 0, -math.pi + 0.1], [0, 0, math.pi - 0.1]
    brute = min(abs(b[2] + k * 2 * math.pi - a[2]) for k in (-1, 0, 1))
    assert distance(robot, a, b) == pytest.approx(brute, abs=1e-12)
    assert brute == pytest.approx(0.2, abs=1e-12)


def test_default_angular_weight_is_half_radius():
    r = rect_robot(0.3, 0.4)
    assert r.weights[2] == pytest.approx(0.25)


angles = st.floats(-10, 10, allow_nan=False)
coords = st.floats(0, 5, allow_nan=False)
configs = st.tuples(coords, coords, angles)


@settings(max_examples=200, deadline=None)
@given(configs, configs, configs)
def test_distance_is_a_metric(a, b, c):
    robot = rect_robot()
    dab, dba = robot.distance(a, b), robot.distance(b, a)
    assert dab == pytest.approx(dba, abs=1e-9)
    assert robot.distance(a, c) <= dab + robot.distance(b, c) + 1e-9


def test_triangle_inequality_random_triples(rng):
    robot = hinged_robot()
    sp = ProblemSpace(Workspace.empty(20, 20, 0.25), robot)
    for _ in range(1000):
        a, b, c = (sp.sample_uniform(rng) for _ in range(3))
        assert abs(robot.distance(a, b) - robot.distance(b, a)) <= 1e-9
        assert robot.distance(a, c) <= robot.distance(a, b) + robot.distance(b, c) + 1e-9


def test_local_path_identity_and_wall():
    occ = np.zeros((20, 20), dtype=bool)
    occ[:, 10] = True
    sp = ProblemSpace(Workspace(occ, 0.1), point_robot())
    a = np.array([0.5, 1.0])
    assert local_path_free(sp, a, a)
    assert not local_path_free(sp, a, [1.5, 1.0])


def cells_crossed(p, q, res):
    """Exact grid traversal of segment p-q (every cell the segment touches)."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    cells = set()
    n = 20000
    for t in np.linspace(0, 1, n + 1):
        pt = p + t * (q - p)
        cells.add((int(math.floor(pt[0] / res)), int(math.floor(pt[1] / res))))
    return cells


def test_local_path_against_traversal_oracle():
    occ = np.zeros((20, 20), dtype=bool)
    occ[:, 10] = True
    occ[9:11, 10] = False
    ws = Workspace(occ, 0.1)
    sp = ProblemSpace(ws, point_robot())
    through_door = ([0.3, 0.95], [1.7, 1.05])
    blocked = ([0.3, 0.3], [1.7, 0.4])
    for p, q in (through_door, blocked):
        oracle_free = not any(ws.occupancy[iy, ix] for ix, iy in cells_crossed(p, q, 0.1))
        assert local_path_free(sp, p, q) == oracle_free
    # a step coarser than the wall can hop over it
    assert not local_path_free(sp, *blocked, step=0.05)
    assert local_path_free(sp, [0.95, 0.3], [1.15, 0.3], step=0.2)


def test_local_path_symmetric_for_holonomic(doorway_rect_space, rng):
    sp = doorway_rect_space
    for _ in range(100):
        a, b = sp.sample_free(rng), sp.sample_free(rng)
        b = a + 0.3 * (b - a) / max(1e-9, np.linalg.norm(b - a))
        b = sp.robot.normalize(b)
        assert sp.local_path_free(a, b) == sp.local_path_free(b, a)


def test_sample_uniform_statistics():
    sp = ProblemSpace(Workspace.empty(10, 10, 0.1), point_robot())
    rng = np.random.default_rng(3)
    xs = np.array([sample_uniform(sp, rng) for _ in range(10_000)])
    assert abs(xs[:, 0].mean() - 0.5) < 0.02
    hsp = ProblemSpace(Workspace.empty(10, 10, 0.1), hinged_robot((0.02, 0.01), (0.02, 0.01)))
    hs = np.array([sample_uniform(hsp, rng) for _ in range(2000)])
    assert np.all(np.abs(hs[:, 3]) <= math.pi / 2)
    a = [sample_uniform(sp, np.random.default_rng(9)) for _ in range(3)]
    b = [sample_uniform(sp, np.random.default_rng(9)) for _ in range(3)]
    assert np.array_equal(a, b)


def rk4_bicycle(x, v, steer, L, dt, n):
    def f(s):
        return np.array([v * math.cos(s[2]), v * math.sin(s[2]), v / L * math.tan(steer)])

    s = np.array(x, dtype=float)
    h = dt / n
    for _ in range(n):
        k1 = f(s)
        k2 = f(s + h / 2 * k1)
        k3 = f(s + h / 2 * k2)
        k4 = f(s + h * k3)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


def test_steer_car_examples():
    car = car_robot()
    x = np.array([1.0, 1.0, 0.3])
    assert np.allclose(steer_car(car, x, (0.0, 0.5), 1.0), x)
    out = steer_car(car, x, (0.2, 0.0), 1.0)
    assert np.allclose(out, [1.0 + 0.2 * math.cos(0.3), 1.0 + 0.2 * math.sin(0.3), 0.3])
    out = steer_car(car, x, (0.2, math.pi / 4), 1.0)
    oracle = rk4_bicycle(x, 0.2, math.pi / 4, car.wheelbase, 1.0, 1000)
    assert abs((out[2] - x[2]) - 0.2 / car.wheelbase * math.tan(math.pi / 4)) < 1e-12
    assert np.allclose(out, oracle, atol=1e-6)
    with pytest.raises(ContractError):
        steer_car(car, x, (0.3, 0.0), 1.0)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-3.2, 3.2),
    st.floats(-0.2, 0.2),
    st.floats(-math.pi / 4, math.pi / 4),
    st.floats(0.01, 30),
)
def test_steer_car_keeps_heading_normalized(th, v, steer, dt):
    out = steer_car(car_robot(), [2.0, 2.0, th], (v, steer), dt)
    assert -math.pi <= out[2] < math.pi


def test_car_wheelbase_default():
    assert car_robot(0.25, 0.1).wheelbase == pytest.approx(0.8 * 0.5)


def test_collision_is_deterministic(doorway_rect_space, rng):
    xs = [doorway_rect_space.sample_uniform(rng) for _ in range(50)]
    assert [doorway_rect_space.collides(x) for x in xs] == [doorway_rect_space.collides(x) for x in xs]


def test_trajectory_membership_and_validation(open_point_space):
    tau = Trajectory([[1.0, 1.0], [3.0, 1.0], [3.0, 4.0]])
    robot = open_point_space.robot
    assert np.array_equal(tau.at(robot, 0.0), [1.0, 1.0])
    assert np.array_equal(tau.at(robot, 1.0), [3.0, 4.0])
    assert tau.contains(robot, [2.0, 1.0])
    assert tau.contains(robot, [3.0, 2.5])
    assert not tau.contains(robot, [2.0, 2.0])
    assert validate_trajectory(open_point_space, tau, [1.0, 1.0], [3.0, 4.0])
    assert not validate_trajectory(open_point_space, tau, [1.0, 1.0], [3.0, 4.5])


def test_wrap_angle_range():
    a = wrap_angle(np.linspace(-20, 20, 1001))
    assert np.all(a >= -math.pi) and np.all(a < math.pi)
