"""Procedural desk-scale environments: doorways, room grids, zigzag corridors.

All generators return a :class:`Workspace` with a one-cell border wall.
"""

from __future__ import annotations

import numpy as np

from .cspace import Workspace


def _bordered(cells: int) -> np.ndarray:
    occ = np.zeros((cells, cells), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return occ


def open_room(size: float = 5.0, resolution: float = 0.05) -> Workspace:
    return Workspace(_bordered(int(round(size / resolution))), resolution)


def doorway(
    size: float = 5.0,
    resolution: float = 0.05,
    door_width: float = 0.2,
    wall_thickness: float = 0.1,
    door_center: float | None = None,
) -> Workspace:
    """Two rooms split by a vertical wall with one doorway."""
    n = int(round(size / resolution))
    occ = _bordered(n)
    t = max(1, int(round(wall_thickness / resolution)))
    x0 = n // 2 - t // 2
    occ[:, x0 : x0 + t] = True
    _cut_door(occ, axis=0, line=slice(x0, x0 + t), center=door_center or size / 2,
              width=door_width, resolution=resolution)
    return Workspace(occ, resolution)


def _cut_door(occ, axis, line, center, width, resolution):
    half = width / 2.0
    lo = int(round((center - half) / resolution))
    hi = int(round((center + half) / resolution))
    if axis == 0:
        occ[lo:hi, line] = False
    else:
        occ[line, lo:hi] = False


def room_grid(
    rooms: tuple[int, int] = (2, 2),
    size: float = 5.0,
    resolution: float = 0.05,
    door_width: float = 0.2,
    wall_thickness: float = 0.1,
    rng: np.random.Generator | None = None,
) -> Workspace:
    """A grid of rooms; each pair of neighboring rooms shares one doorway.

    Door positions are drawn from ``rng`` when given, otherwise centered.
    """
    n = int(round(size / resolution))
    occ = _bordered(n)
    t = max(1, int(round(wall_thickness / resolution)))
    nx, ny = rooms
    xs = [int(round(n * k / nx)) - t // 2 for k in range(1, nx)]
    ys = [int(round(n * k / ny)) - t // 2 for k in range(1, ny)]
    for x0 in xs:
        occ[:, x0 : x0 + t] = True
    for y0 in ys:
        occ[y0 : y0 + t, :] = True
    bounds_x = [0.0] + [(x0 + t / 2) * resolution for x0 in xs] + [size]
    bounds_y = [0.0] + [(y0 + t / 2) * resolution for y0 in ys] + [size]
    margin = door_width + 2 * wall_thickness

    def pick(lo, hi):
        if rng is None:
            return (lo + hi) / 2
        return float(rng.uniform(lo + margin, hi - margin))

    for i, x0 in enumerate(xs):
        for j in range(ny):
            c = pick(bounds_y[j], bounds_y[j + 1])
            _cut_door(occ, 0, slice(x0, x0 + t), c, door_width, resolution)
    for j, y0 in enumerate(ys):
        for i in range(nx):
            c = pick(bounds_x[i], bounds_x[i + 1])
            _cut_door(occ, 1, slice(y0, y0 + t), c, door_width, resolution)
    return Workspace(occ, resolution)


def zigzag(
    size: float = 5.0,
    resolution: float = 0.05,
    walls: int = 3,
    gap: float = 0.3,
    wall_thickness: float = 0.1,
) -> Workspace:
    """Horizontal walls leaving a gap alternately at the right and left end."""
    n = int(round(size / resolution))
    occ = _bordered(n)
    t = max(1, int(round(wall_thickness / resolution)))
    g = int(round(gap / resolution))
    for k in range(1, walls + 1):
        y0 = int(round(n * k / (walls + 1))) - t // 2
        occ[y0 : y0 + t, :] = True
        if k % 2:
            occ[y0 : y0 + t, n - 1 - g : n - 1] = False
        else:
            occ[y0 : y0 + t, 1 : 1 + g] = False
    return Workspace(occ, resolution)


GENERATORS = {
    "open": open_room,
    "doorway": doorway,
    "rooms": room_grid,
    "zigzag": zigzag,
}
