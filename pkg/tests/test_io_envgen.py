import numpy as np
import pytest

from regionplan import envgen
from regionplan.cspace import ContractError, ProblemSpace, Workspace, point_robot, rect_robot
from regionplan.io import (
    format_ascii_grid,
    load_environment,
    load_scenario,
    parse_ascii_grid,
    save_environment,
    scenario_dict,
)


def test_ascii_grid_roundtrip(tmp_path):
    text = "4 3 0.5\n#...\n..#.\n....\n"
    ws = parse_ascii_grid(text)
    assert ws.width_cells == 4 and ws.height_cells == 3
    assert ws.occupancy[2, 0]  # first row is the top
    assert ws.occupancy[1, 2]
    assert format_ascii_grid(ws) == text
    save_environment(tmp_path / "g.txt", ws)
    assert np.array_equal(load_environment(tmp_path / "g.txt").occupancy, ws.occupancy)


def test_pgm_roundtrip(tmp_path):
    ws = envgen.zigzag(5.0, 0.1)
    save_environment(tmp_path / "z.pgm", ws)
    back = load_environment(tmp_path / "z.pgm", 0.1)
    assert np.array_equal(back.occupancy, ws.occupancy)


def test_malformed_grid_rejected():
    with pytest.raises(ValueError):
        parse_ascii_grid("3 2 0.1\n...\n")


def test_scenario_roundtrip(tmp_path):
    import json
    save_environment(tmp_path / "door.pgm", envgen.doorway(5.0, 0.05))
    data = scenario_dict("door.pgm", rect_robot(), [1.0, 1.0, 0.0], [4.0, 4.0, 1.0])
    (tmp_path / "s.json").write_text(json.dumps(data))
    problem = load_scenario(tmp_path / "s.json")
    assert problem.space.robot == rect_robot()
    assert np.array_equal(problem.goal, [4.0, 4.0, 1.0])


def test_colliding_scenario_rejected(tmp_path):
    import json
    save_environment(tmp_path / "door.pgm", envgen.doorway(5.0, 0.05))
    data = scenario_dict("door.pgm", point_robot(), [0.01, 0.01], [4.0, 4.0])
    (tmp_path / "s.json").write_text(json.dumps(data))
    with pytest.raises(ContractError):
        load_scenario(tmp_path / "s.json")


@pytest.mark.parametrize("name", sorted(envgen.GENERATORS))
def test_generators_have_border_and_connected_free_space(name):
    from regionplan.cspace import ConfigLattice
    ws = envgen.GENERATORS[name](resolution=0.1)
    occ = ws.occupancy
    assert occ[0].all() and occ[-1].all() and occ[:, 0].all() and occ[:, -1].all()
    assert ws.width == pytest.approx(5.0)
    assert ConfigLattice(ProblemSpace(ws, point_robot())).label()[1] == 1


def test_room_grid_random_doors_are_seeded():
    a = envgen.room_grid((3, 3), rng=np.random.default_rng(1))
    b = envgen.room_grid((3, 3), rng=np.random.default_rng(1))
    assert np.array_equal(a.occupancy, b.occupancy)
    assert lattice_components(a) == 1


def lattice_components(ws):
    from regionplan.cspace import ConfigLattice
    return ConfigLattice(ProblemSpace(ws, point_robot())).label()[1]
