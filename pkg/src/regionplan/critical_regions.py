"""Empirical critical regions.

Criticality of a cell is the fraction of corpus plans passing through it,
divided by the cell's reference measure. Cells above a threshold are grouped
into face-connected regions, and each region keeps a set of collision-free
sample configurations. Non-workspace DOFs (heading, hinge) are tracked as
per-cell histograms over a few bins, and regions sample those DOFs from the
dominant bin of each cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage

from .cspace import (
    HINGE_LIMIT,
    HINGED4,
    MotionPlanningProblem,
    ProblemSpace,
    RobotModel,
    Trajectory,
    validate_trajectory,
)
from .io import read_pgm, write_pgm
from .ll_planner import Budget

BasePlanner = Callable[[MotionPlanningProblem, Budget, np.random.Generator], "Trajectory | None"]

REJECTION_TRIES = 50


class EmptyCorpusError(RuntimeError):
    pass


@dataclass
class PlanCorpus:
    environment: str
    robot: RobotModel
    plans: list[tuple[np.ndarray, np.ndarray, Trajectory]] = field(default_factory=list)
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.plans)

    def save(self, path) -> None:
        """Line-delimited JSON: one header line, then one record per plan."""
        with open(path, "w") as f:
            header = {"environment": self.environment, "robot": self.robot.to_dict(), "skipped": self.skipped}
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for start, goal, tau in self.plans:
                rec = {
                    "start": start.tolist(),
                    "goal": goal.tolist(),
                    "waypoints": tau.waypoints.tolist(),
                }
                f.write(json.dumps(rec, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "PlanCorpus":
        with open(path) as f:
            lines = [ln for ln in f if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty corpus file")
        header = json.loads(lines[0])
        corpus = cls(header["environment"], RobotModel.from_dict(header["robot"]), skipped=header.get("skipped", 0))
        for ln in lines[1:]:
            rec = json.loads(ln)
            corpus.plans.append(
                (np.asarray(rec["start"], float), np.asarray(rec["goal"], float), Trajectory(np.asarray(rec["waypoints"], float)))
            )
        return corpus


def generate_corpus(
    space: ProblemSpace,
    n_goals: int,
    n_starts_per_goal: int,
    base_planner: BasePlanner,
    rng: np.random.Generator,
    *,
    budget: Budget | None = None,
    goals=None,
    environment: str = "env",
) -> PlanCorpus:
    """Solve ``n_goals x n_starts_per_goal`` random queries; failed queries are skipped."""
    budget = budget or Budget(seconds=5.0)
    goals = [space.sample_free(rng) for _ in range(n_goals)] if goals is None else [np.asarray(g, float) for g in goals]
    corpus = PlanCorpus(environment, space.robot)
    for goal in goals:
        for _ in range(n_starts_per_goal):
            start = space.sample_free(rng)
            problem = MotionPlanningProblem(space, start, goal)
            tau = base_planner(problem, budget, rng)
            if tau is None or not validate_trajectory(space, tau, problem.start, problem.goal):
                corpus.skipped += 1
                continue
            corpus.plans.append((problem.start, problem.goal, tau))
    if not corpus.plans:
        raise EmptyCorpusError(f"no query solved ({corpus.skipped} attempted)")
    return corpus


def default_angle_bins(robot: RobotModel) -> list[int]:
    """Bins per non-workspace DOF: 4 for heading, 5 for the hinge."""
    return [4 if d == 2 else 5 for d in range(2, robot.dof_count)]


def angle_bin(robot: RobotModel, dof: int, values, p: int) -> np.ndarray:
    """Bin index of DOF values. Heading bins are centered on multiples of 2*pi/p."""
    v = np.asarray(values, dtype=float)
    if dof == 2:
        width = 2 * math.pi / p
        return (np.floor((v + math.pi + width / 2) / width).astype(int)) % p
    lo, hi = -HINGE_LIMIT, HINGE_LIMIT
    return np.clip(np.floor((v - lo) / (hi - lo) * p).astype(int), 0, p - 1)


def bin_range(dof: int, b: int, p: int) -> tuple[float, float]:
    if dof == 2:
        width = 2 * math.pi / p
        center = -math.pi + b * width
        return center - width / 2, center + width / 2
    lo, hi = -HINGE_LIMIT, HINGE_LIMIT
    w = (hi - lo) / p
    return lo + b * w, lo + (b + 1) * w


@dataclass
class CriticalityField:
    counts: np.ndarray
    total_plans: int
    cell_size: float
    cell_measure: float = 1.0
    channel_counts: list[np.ndarray] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def criticality(self) -> np.ndarray:
        return self.counts / self.total_plans / self.cell_measure

    def dominant_bins(self) -> list[np.ndarray]:
        """Per-cell argmax bin for each non-workspace DOF (-1 where unobserved)."""
        out = []
        for ch in self.channel_counts:
            dom = np.argmax(ch, axis=-1)
            dom[ch.sum(axis=-1) == 0] = -1
            out.append(dom)
        return out


def _bins_for(space: ProblemSpace, bins: int | None) -> tuple[int, int, float]:
    ws = space.workspace
    if bins is None:
        cell = 2.0 * ws.resolution
    else:
        cell = max(ws.width, ws.height) / bins
    return int(math.ceil(ws.width / cell - 1e-9)), int(math.ceil(ws.height / cell - 1e-9)), cell


def estimate_criticality(
    corpus: PlanCorpus,
    space: ProblemSpace,
    bins: int | None = None,
    *,
    cell_measure: float = 1.0,
    angle_bins: list[int] | None = None,
) -> CriticalityField:
    """Count, per workspace cell, how many distinct plans enter it.

    ``bins`` is the number of cells along the longer workspace side; by default
    cells are twice the grid resolution.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot estimate criticality from an empty corpus")
    nx, ny, cell = _bins_for(space, bins)
    robot = space.robot
    angle_bins = default_angle_bins(robot) if angle_bins is None else angle_bins
    counts = np.zeros((ny, nx), dtype=np.int64)
    channels = [np.zeros((ny, nx, p), dtype=np.int64) for p in angle_bins]
    for _, _, tau in corpus.plans:
        pts = tau.interpolants(space)
        ix = np.clip((pts[:, 0] / cell).astype(int), 0, nx - 1)
        iy = np.clip((pts[:, 1] / cell).astype(int), 0, ny - 1)
        flat = np.unique(iy * nx + ix)
        counts.flat[flat] += 1
        for k, p in enumerate(angle_bins):
            b = angle_bin(robot, 2 + k, pts[:, 2 + k], p)
            keys = np.unique((iy * nx + ix) * p + b)
            channels[k].reshape(-1)[keys] += 1
    return CriticalityField(counts, len(corpus), cell, cell_measure, channels)


@dataclass
class CriticalRegion:
    id: int
    samples: np.ndarray
    score: float
    cells: list[tuple[int, int]]
    cell_size: float
    channels: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "score": self.score,
            "cell_size": self.cell_size,
            "cells": [list(c) for c in self.cells],
            "channels": {str(k): v for k, v in self.channels.items()},
            "samples": self.samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriticalRegion":
        return cls(
            id=int(d["id"]),
            samples=np.asarray(d["samples"], float),
            score=float(d["score"]),
            cells=[tuple(c) for c in d["cells"]],
            cell_size=float(d["cell_size"]),
            channels={int(k): int(v) for k, v in d.get("channels", {}).items()},
        )


def save_regions(path, regions: list[CriticalRegion]) -> None:
    Path(path).write_text(json.dumps({"regions": [r.to_dict() for r in regions]}, sort_keys=True))


def load_regions(path) -> list[CriticalRegion]:
    return [CriticalRegion.from_dict(d) for d in json.loads(Path(path).read_text())["regions"]]


def _components(mask: np.ndarray, min_cells: int) -> list[np.ndarray]:
    """Face-connected components of ``mask`` in scan order, as (row, col) index arrays."""
    labels, n = ndimage.label(mask)
    comps = []
    for lab in range(1, n + 1):
        rows, cols = np.nonzero(labels == lab)
        if len(rows) >= min_cells:
            comps.append(np.stack([rows, cols], axis=1))
    return comps


def _regions_from_mask(
    space: ProblemSpace,
    mask: np.ndarray,
    score_map: np.ndarray,
    dominant: list[np.ndarray],
    cell_size: float,
    min_cells: int,
    samples_per_region: int,
    rng: np.random.Generator,
    angle_bins: list[int],
) -> list[CriticalRegion]:
    robot = space.robot
    regions: list[CriticalRegion] = []
    for comp in _components(mask, min_cells):
        samples = _sample_cells(space, comp, dominant, cell_size, samples_per_region, rng, angle_bins)
        if not samples:
            continue
        channels = {}
        for k, dom in enumerate(dominant):
            vals = dom[comp[:, 0], comp[:, 1]]
            vals = vals[vals >= 0]
            if len(vals):
                channels[2 + k] = int(np.bincount(vals).argmax())
        regions.append(
            CriticalRegion(
                id=len(regions),
                samples=np.array(samples),
                score=float(score_map[comp[:, 0], comp[:, 1]].mean()),
                cells=[(int(c), int(r)) for r, c in comp],
                cell_size=cell_size,
                channels=channels,
            )
        )
    return regions


def _sample_cells(space, comp, dominant, cell_size, n, rng, angle_bins):
    robot = space.robot
    lo, hi = robot.lower_bounds(space.workspace), robot.upper_bounds(space.workspace)
    live = list(range(len(comp)))
    out = []
    while len(out) < n and live:
        pick = live[int(rng.integers(len(live)))]
        r, c = comp[pick]
        for _ in range(REJECTION_TRIES):
            x = np.empty(robot.dof_count)
            x[0] = (c + rng.random()) * cell_size
            x[1] = (r + rng.random()) * cell_size
            for k in range(2, robot.dof_count):
                b = dominant[k - 2][r, c] if k - 2 < len(dominant) else -1
                if b >= 0:
                    a0, a1 = bin_range(k, int(b), angle_bins[k - 2])
                    x[k] = rng.uniform(a0, a1)
                else:
                    x[k] = rng.uniform(lo[k], hi[k])
            x = robot.normalize(x)
            if not space.collides(x):
                out.append(x)
                break
        else:
            live.remove(pick)
    return out


def extract_regions(
    field_: CriticalityField,
    space: ProblemSpace,
    threshold: float,
    min_cells: int = 1,
    samples_per_region: int = 30,
    rng: np.random.Generator | None = None,
    angle_bins: list[int] | None = None,
) -> list[CriticalRegion]:
    """Connected groups of cells with criticality >= threshold, with sampled members."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    rng = rng or np.random.default_rng(0)
    crit = field_.criticality
    angle_bins = angle_bins or [ch.shape[-1] for ch in field_.channel_counts]
    return _regions_from_mask(
        space, crit >= threshold, crit, field_.dominant_bins(), field_.cell_size,
        min_cells, samples_per_region, rng, angle_bins,
    )


def region_mask(regions: list[CriticalRegion], shape: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for reg in regions:
        for c, r in reg.cells:
            mask[r, c] = True
    return mask


def encode_bin(b: int, p: int) -> int:
    return int(round(255 * (b + 0.5) / p))


def decode_bin(pixel, p: int) -> np.ndarray:
    return np.minimum(p - 1, (np.asarray(pixel, dtype=int) * p) // 256)


def export_regions_raster(
    prefix,
    space: ProblemSpace,
    criticality: np.ndarray,
    dominant: list[np.ndarray] | None = None,
    angle_bins: list[int] | None = None,
) -> list[Path]:
    """Write ``<prefix>_ch0.pgm`` (criticality scaled to 0..255) and one PGM per extra DOF.

    Extra channels hold the dominant bin of each cell, encoded at evenly spaced levels.
    """
    dominant = dominant or []
    angle_bins = angle_bins or default_angle_bins(space.robot)
    crit = np.asarray(criticality, dtype=float)
    peak = crit.max() if crit.size and crit.max() > 0 else 1.0
    paths = []
    ch0 = np.round(255 * crit / peak).astype(np.uint8)
    p0 = Path(f"{prefix}_ch0.pgm")
    write_pgm(p0, ch0[::-1])
    paths.append(p0)
    for k, dom in enumerate(dominant):
        pix = np.zeros(dom.shape, dtype=np.uint8)
        seen = dom >= 0
        pix[seen] = [encode_bin(int(b), angle_bins[k]) for b in dom[seen]]
        pk = Path(f"{prefix}_ch{k + 1}.pgm")
        write_pgm(pk, pix[::-1])
        paths.append(pk)
    return paths


def import_regions_raster(
    files: list,
    space: ProblemSpace,
    threshold: float,
    samples_per_region: int = 30,
    rng: np.random.Generator | None = None,
    *,
    min_cells: int = 1,
    angle_bins: list[int] | None = None,
) -> list[CriticalRegion]:
    """Build regions from externally predicted rasters (first channel = workspace criticality).

    Raster size must equal the workspace grid or an integer coarsening of it.
    ``threshold`` applies to the first channel scaled to [0, 1].
    """
    if not files:
        raise ValueError("no raster files given")
    rng = rng or np.random.default_rng(0)
    ws = space.workspace
    rasters = []
    for f in files:
        try:
            rasters.append(read_pgm(f)[::-1])
        except (OSError, ValueError) as exc:
            raise ValueError(f"cannot read raster {f}: {exc}") from exc
    h, w = rasters[0].shape
    if any(r.shape != (h, w) for r in rasters):
        raise ValueError("raster channels differ in size")
    if ws.width_cells % w or ws.height_cells % h or ws.width_cells // w != ws.height_cells // h:
        raise ValueError(
            f"raster {w}x{h} does not match workspace grid {ws.width_cells}x{ws.height_cells}"
        )
    cell = ws.resolution * (ws.width_cells // w)
    angle_bins = angle_bins or default_angle_bins(space.robot)
    crit = rasters[0].astype(float) / 255.0
    dominant = []
    for k, r in enumerate(rasters[1 : 1 + len(angle_bins)]):
        dom = decode_bin(r, angle_bins[k])
        dom[r == 0] = -1
        dominant.append(dom)
    return _regions_from_mask(space, crit >= threshold, crit, dominant, cell, min_cells,
                              samples_per_region, rng, angle_bins)
