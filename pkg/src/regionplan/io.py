"""Environment, scenario and raster file formats.

ASCII environments start with a ``width height resolution`` header followed
by ``height`` rows of ``.`` (free) and ``#`` (occupied). The first row is the
top of the map (largest y). PGM environments use 0 = occupied, 255 = free,
thresholded at 128, also top row first.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .cspace import MotionPlanningProblem, ProblemSpace, RobotModel, Workspace

PGM_THRESHOLD = 128


def parse_ascii_grid(text: str) -> Workspace:
    lines = [ln.rstrip("\r") for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty environment file")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError(f"bad header {lines[0]!r}; expected 'width height resolution'")
    width, height, resolution = int(header[0]), int(header[1]), float(header[2])
    rows = lines[1:]
    if len(rows) != height:
        raise ValueError(f"expected {height} rows, found {len(rows)}")
    occ = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {r + 1} has {len(row)} cells, expected {width}")
        bad = set(row) - {".", "#"}
        if bad:
            raise ValueError(f"row {r + 1} has unexpected characters {sorted(bad)}")
        occ[height - 1 - r] = np.frombuffer(row.encode(), dtype=np.uint8) == ord("#")
    return Workspace(occ, resolution)


def format_ascii_grid(ws: Workspace) -> str:
    out = [f"{ws.width_cells} {ws.height_cells} {ws.resolution:g}"]
    for row in ws.occupancy[::-1]:
        out.append("".join("#" if c else "." for c in row))
    return "\n".join(out) + "\n"


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit PGM as a uint8 array, top row first."""
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "1"):
            raise ValueError(f"{path}: expected 8-bit grayscale PGM, got mode {im.mode}")
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


def write_pgm(path, pixels: np.ndarray) -> None:
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(path, format="PPM")


def load_environment(path, resolution: float = 0.05) -> Workspace:
    """Load an ASCII grid or a PGM. PGMs carry no resolution, so it is passed in."""
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic in (b"P5", b"P2"):
        pixels = read_pgm(path)
        return Workspace((pixels < PGM_THRESHOLD)[::-1], resolution)
    return parse_ascii_grid(path.read_text())


def save_environment(path, ws: Workspace) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(path, np.where(ws.occupancy[::-1], 0, 255))
    else:
        path.write_text(format_ascii_grid(ws))


def load_scenario(path) -> MotionPlanningProblem:
    """Scenario JSON: ``{"environment", "robot", "start", "goal"[, "resolution"]}``.

    A relative environment path resolves against the scenario file's directory.
    """
    path = Path(path)
    data = json.loads(path.read_text())
    env_path = Path(data["environment"])
    if not env_path.is_absolute():
        env_path = path.parent / env_path
    ws = load_environment(env_path, float(data.get("resolution", 0.05)))
    space = ProblemSpace(ws, RobotModel.from_dict(data["robot"]))
    return MotionPlanningProblem(space, np.asarray(data["start"], float), np.asarray(data["goal"], float))


def scenario_dict(environment: str, robot: RobotModel, start, goal) -> dict:
    return {
        "environment": environment,
        "robot": robot.to_dict(),
        "start": [float(v) for v in start],
        "goal": [float(v) for v in goal],
    }
