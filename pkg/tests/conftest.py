import numpy as np
import pytest

from regionplan.cspace import ProblemSpace, Workspace, point_robot, rect_robot
from regionplan import envgen


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def open_point_space():
    return ProblemSpace(Workspace.empty(20, 20, 0.5), point_robot())


@pytest.fixture
def doorway_point_space():
    return ProblemSpace(envgen.doorway(size=5.0, resolution=0.1, door_width=0.4), point_robot())


@pytest.fixture
def doorway_rect_space():
    return ProblemSpace(envgen.doorway(size=5.0, resolution=0.05, door_width=0.2), rect_robot())


_VERDICTS: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
