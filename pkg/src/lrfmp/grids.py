"""Equidistributed Reuter point grids on the unit sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SphereGrid:
    """Ordered unit vectors; ``gamma`` is the Reuter control parameter (None if custom)."""

    points: np.ndarray
    gamma: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 3))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def lon_lat_deg(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.points
        lon = np.degrees(np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi))
        lat = np.degrees(np.arcsin(np.clip(p[:, 2], -1.0, 1.0)))
        return lon, lat


def ring_counts(gamma: int) -> list[int]:
    """Number of points on each latitude ring k = 1..gamma-1."""
    counts = []
    dtheta = math.pi / gamma
    for k in range(1, gamma):
        theta = k * dtheta
        c = (math.cos(dtheta) - math.cos(theta) ** 2) / math.sin(theta) ** 2
        counts.append(int(math.floor(2.0 * math.pi / math.acos(c))))
    return counts


def reuter_grid(gamma: int) -> SphereGrid:
    """Reuter grid: both poles plus gamma-1 latitude rings.

    Ring k sits at polar angle k*pi/gamma and carries
    floor(2 pi / arccos((cos(pi/gamma) - cos^2 theta_k) / sin^2 theta_k))
    points at longitudes (l - 1/2) * 2 pi / count. Order: north pole, rings
    by increasing k and longitude, south pole.
    """
    if int(gamma) != gamma or gamma < 2:
        raise ValueError(f"gamma must be an integer >= 2 (got {gamma})")
    gamma = int(gamma)
    pts = [np.array([[0.0, 0.0, 1.0]])]
    for k, count in enumerate(ring_counts(gamma), start=1):
        theta = k * math.pi / gamma
        phi = (np.arange(1, count + 1) - 0.5) * 2.0 * math.pi / count
        st = math.sin(theta)
        pts.append(np.stack([st * np.cos(phi), st * np.sin(phi), np.full(count, math.cos(theta))], axis=1))
    pts.append(np.array([[0.0, 0.0, -1.0]]))
    return SphereGrid(np.concatenate(pts), gamma)


def grid_size(gamma: int) -> int:
    return 2 + sum(ring_counts(gamma))


def gamma_for_size(size: int, search_max: int = 400) -> int:
    """Smallest gamma whose grid has exactly ``size`` points."""
    for g in range(2, search_max + 1):
        if grid_size(g) == size:
            return g
    raise ValueError(f"no Reuter grid with {size} points for gamma <= {search_max}")


def grid_with_radii(grid: SphereGrid, radii) -> np.ndarray:
    """Kernel parameters r * xi for every radius (outer loop) and grid point."""
    radii = [float(r) for r in radii]
    if any(not 0.0 < r < 1.0 for r in radii):
        raise ValueError("radii must lie in (0, 1)")
    if not radii:
        return np.zeros((0, 3))
    return np.concatenate([r * grid.points for r in radii])
