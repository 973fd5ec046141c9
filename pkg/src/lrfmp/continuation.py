"""Discretized upward continuation to satellite height sigma > 1.

For F = sum <F, Y_{n,j}> Y_{n,j} the continued potential is
(T F)(sigma eta) = sum <F, Y_{n,j}> sigma^{-n-1} Y_{n,j}(eta); the discrete
operator samples it at the points of a data grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import split_elements
from .errors import DomainError
from .grids import SphereGrid
from .kernels import _upward_formula, _check_sigma, _ball
from .spherical import check_index, sh_all_cartesian

# GRACE-like orbit: ~400 km above a 6371 km mean Earth radius
DEFAULT_SIGMA = 1.06


@dataclass
class ProblemSetup:
    """Data locations, satellite ratio and the data vector y."""

    grid: SphereGrid
    sigma: float
    y: np.ndarray

    def __post_init__(self):
        self.sigma = _check_sigma(self.sigma)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.y.shape[0] != len(self.grid):
            raise ValueError(f"data length {self.y.shape[0]} != grid size {len(self.grid)}")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("data vector contains non-finite entries")

    @property
    def eta(self) -> np.ndarray:
        return self.grid.points


def upward_sh(n: int, j: int, eta, sigma: float):
    """sigma^{-n-1} Y_{n,j}(eta); sigma = 1 is accepted and gives Y_{n,j}."""
    check_index(n, j)
    if not sigma >= 1.0:
        raise DomainError("sigma must be >= 1")
    out = sigma ** (-n - 1.0) * sh_all_cartesian(n, eta)[n * n + n + j]
    return float(out) if np.ndim(out) == 0 else out


def operator_matrix(elements, eta: np.ndarray, sigma: float, chunk: int = 512) -> np.ndarray:
    """Rows T d_i sampled at the unit vectors ``eta``; shape (len(elements), len(eta))."""
    sigma = _check_sigma(sigma)
    eta = np.asarray(eta, dtype=float).reshape(-1, 3)
    sh_pos, nj, apk_pos, x = split_elements(elements)
    out = np.empty((len(sh_pos) + len(apk_pos), eta.shape[0]))
    if len(sh_pos):
        nmax = int(nj[:, 0].max())
        y = sh_all_cartesian(nmax, eta)[nj[:, 0] ** 2 + nj[:, 0] + nj[:, 1]]
        out[sh_pos] = sigma ** (-nj[:, 0:1] - 1.0) * y
    if len(apk_pos):
        _ball(x)
        for start in range(0, len(apk_pos), chunk):
            sl = slice(start, start + chunk)
            out[apk_pos[sl]] = _upward_formula(x[sl, None, :], eta[None, :, :], sigma)
    return out


def apply_operator(d, setup: ProblemSetup) -> np.ndarray:
    """T d at every satellite point sigma * eta_i, in grid order."""
    return operator_matrix([d], setup.eta, setup.sigma)[0]


def synthesize_data(model, grid: SphereGrid, sigma: float, noise_level: float = 0.0,
                    seed: int | None = None) -> np.ndarray:
    """y = sum_i c_i T d_i on ``grid``, optionally with seeded Gaussian noise.

    ``noise_level`` is relative to the RMS of the clean data.
    """
    model = list(model)
    if not model:
        y = np.zeros(len(grid))
    else:
        coeffs = np.array([c for c, _ in model], dtype=float)
        y = coeffs @ operator_matrix([d for _, d in model], grid.points, sigma)
    if noise_level > 0.0:
        rng = np.random.default_rng(seed)
        rms = np.sqrt(np.mean(y * y))
        y = y + noise_level * rms * rng.standard_normal(y.shape)
    return y
