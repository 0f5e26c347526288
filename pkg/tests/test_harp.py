import numpy as np
import pytest

from regionplan import envgen
from regionplan.abstraction import abstract_trajectory
from regionplan.critical_regions import CriticalRegion
from regionplan.cspace import ContractError, MotionPlanningProblem, ProblemSpace, Workspace, point_robot, validate_trajectory
from regionplan.harp import HarpConfig, HarpContext, harp_plan, moving_average, solve_repeated
from regionplan.hl_search import HeuristicTable
from regionplan.ll_planner import Budget


def region(rid, samples):
    return CriticalRegion(rid, np.asarray(samples, float), 1.0, [], 1.0)


@pytest.fixture
def door_setup():
    ws = envgen.doorway(size=5.0, resolution=0.1, door_width=0.4)
    sp = ProblemSpace(ws, point_robot())
    rng = np.random.default_rng(0)
    door = region(1, [[2.5, 2.5 + d] for d in np.linspace(-0.15, 0.15, 7)])
    left = region(0, [[1.2, y] for y in np.linspace(0.5, 4.5, 9)])
    right = region(2, [[3.8, y] for y in np.linspace(0.5, 4.5, 9)])
    return sp, [left, door, right]


def test_config_validation():
    with pytest.raises(ContractError):
        HarpConfig(beam_width=0)
    with pytest.raises(ContractError):
        HarpConfig(n_trees=4, cr_seeds=5)


def test_empty_regions_fall_back_to_uniform():
    sp = ProblemSpace(envgen.open_room(5.0, 0.1), point_robot())
    rng = np.random.default_rng(1)
    for k in range(5):
        q = MotionPlanningProblem(sp, sp.sample_free(rng), sp.sample_free(rng))
        res = harp_plan(q, [], HeuristicTable(), HarpConfig(budget=Budget(seconds=5)), rng=np.random.default_rng(k))
        assert res.success
        assert res.plans == []


def test_same_state_gives_length_one_plan(door_setup):
    sp, regs = door_setup
    q = MotionPlanningProblem(sp, [1.0, 1.0], [1.3, 3.0])
    res = harp_plan(q, regs, HeuristicTable(), HarpConfig(budget=Budget(seconds=5)))
    assert res.success
    assert res.plans[0].states == (0,)


def test_doorway_plan_stays_within_candidate_states(door_setup):
    sp, regs = door_setup
    table = HeuristicTable()
    ctx = HarpContext(sp, regs)
    for k in range(5):
        q = MotionPlanningProblem(sp, [0.8, 0.5 + 0.8 * k], [4.2, 4.5 - 0.8 * k])
        res = harp_plan(q, regs, table, HarpConfig(budget=Budget(seconds=10), confine=True),
                        rng=np.random.default_rng(k), context=ctx)
        assert res.success
        assert validate_trajectory(sp, res.trajectory, q.start, q.goal)
        plan_states = {s for p in res.plans if p.states[0] == 0 for s in p.states}
        assert set(abstract_trajectory(sp, ctx.index, res.trajectory)) <= plan_states
        assert res.abstract == abstract_trajectory(sp, ctx.index, res.trajectory)


def test_success_updates_heuristic_along_abstract_trajectory(door_setup):
    sp, regs = door_setup
    table = HeuristicTable()
    q = MotionPlanningProblem(sp, [0.8, 2.5], [4.2, 2.5])
    res = harp_plan(q, regs, table, HarpConfig(budget=Budget(seconds=10)))
    assert res.success
    pairs = list(zip(res.abstract, res.abstract[1:]))
    assert pairs
    for p in pairs:
        assert table.eps[p] == 0.5
    assert set(table.eps) == set(pairs)


def test_harp_deterministic_with_frozen_table(door_setup):
    sp, regs = door_setup
    q = MotionPlanningProblem(sp, [0.8, 1.0], [4.2, 4.0])
    cfg = HarpConfig(budget=Budget(samples=3000), update=False)
    a = harp_plan(q, regs, HeuristicTable(), cfg)
    b = harp_plan(q, regs, HeuristicTable(), cfg)
    assert np.array_equal(a.trajectory.waypoints, b.trajectory.waypoints)


def test_unreachable_goal_fails_cleanly():
    occ = np.zeros((50, 50), dtype=bool)
    occ[:, 24:26] = True
    sp = ProblemSpace(Workspace(occ, 0.1), point_robot())
    regs = [region(0, [[1.0, 2.5]]), region(1, [[4.0, 2.5]])]
    q = MotionPlanningProblem(sp, [1.0, 1.0], [4.0, 1.0])
    res = harp_plan(q, regs, HeuristicTable(), HarpConfig(budget=Budget(samples=500)))
    assert not res.success
    assert res.trajectory is None


def test_solve_repeated_halves_eps_each_iteration(door_setup):
    sp, regs = door_setup
    q = MotionPlanningProblem(sp, [0.8, 2.5], [4.2, 2.5])
    run = solve_repeated([q], 3, False, regs, HarpConfig(budget=Budget(seconds=10)))
    assert run.solved == [1, 1, 1]
    assert len(run.mean_seconds) == 3
    for it, snap in enumerate(run.eps):
        assert snap[0]
        assert all(v <= 0.5 ** (it + 1) * (1 + 1e-12) for v in snap[0].values())
    for prev, cur in zip(run.eps, run.eps[1:]):
        for key, v in cur[0].items():
            assert v <= prev[0].get(key, 1.0)


def test_solve_repeated_zero_repetitions(door_setup):
    sp, regs = door_setup
    q = MotionPlanningProblem(sp, [0.8, 2.5], [4.2, 2.5])
    assert solve_repeated([q], 0, True, regs).mean_seconds == []


def test_shared_table_mode_keeps_one_table(door_setup):
    sp, regs = door_setup
    qs = [MotionPlanningProblem(sp, [0.8, 2.5], [4.2, 2.5]), MotionPlanningProblem(sp, [0.8, 1.0], [4.2, 4.0])]
    shared = solve_repeated(qs, 2, True, regs, HarpConfig(budget=Budget(seconds=10)))
    separate = solve_repeated(qs, 2, False, regs, HarpConfig(budget=Budget(seconds=10)))
    assert all(len(s) == 1 for s in shared.eps)
    assert all(len(s) == 2 for s in separate.eps)


def test_moving_average():
    assert np.allclose(moving_average([1, 2, 3, 4], 2), [1, 1.5, 2.5, 3.5])
    assert np.allclose(moving_average([5.0], 3), [5.0])
