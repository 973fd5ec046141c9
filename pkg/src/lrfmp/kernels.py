"""Abel-Poisson kernels, their upward continuation and Sobolev H2 products.

The H2 inner product weights degree-n Fourier coefficients by (n+0.5)^4.
Products involving a kernel have no closed form here and are summed as
truncated series controlled by :class:`SeriesControl`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _jit
from .elements import AbelPoisson, SphericalHarmonic, split_elements
from .errors import DomainError, SeriesTruncationError
from .spherical import cartesian_to_polar, grad_solid_sh, sh_all, sin_polar

_INV_4PI = 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation rule for the kernel series.

    Summation stops once ``consecutive_small`` successive envelope terms are
    each below ``rel_floor`` times the running envelope sum; reaching
    ``max_terms`` first raises :class:`SeriesTruncationError`.
    """

    max_terms: int = 5000
    rel_floor: float = 1e-14
    consecutive_small: int = 3

    def __post_init__(self):
        if self.max_terms < 1 or self.rel_floor <= 0 or self.consecutive_small < 1:
            raise ValueError(f"invalid series control {self}")


DEFAULT_SERIES = SeriesControl()


def _ball(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.linalg.norm(x, axis=-1) >= 1.0):
        raise DomainError("kernel parameter must lie strictly inside the unit ball")
    return x


def apk_eval(x, eta):
    """Abel-Poisson kernel (1-|x|^2) / (4 pi (1+|x|^2-2 x.eta)^{3/2}).

    ``x`` (..., 3) and ``eta`` (..., 3) broadcast against each other.
    """
    x = _ball(x)
    eta = np.asarray(eta, dtype=float)
    x2 = np.sum(x * x, axis=-1)
    out = (1.0 - x2) / (4.0 * np.pi * (1.0 + x2 - 2.0 * np.sum(x * eta, axis=-1)) ** 1.5)
    return float(out) if np.ndim(out) == 0 else out


def _upward_formula(x, eta, sigma):
    x2 = np.sum(x * x, axis=-1)
    dist = sigma * sigma + x2 - 2.0 * sigma * np.sum(x * eta, axis=-1)
    return (sigma * sigma - x2) / (4.0 * np.pi * dist ** 1.5)


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 1.0:
        raise DomainError(f"satellite ratio sigma must exceed 1 (got {sigma})")
    return sigma


def apk_upward(x, eta, sigma: float):
    """Upward-continued kernel (T P(x,.))(sigma eta) for sigma > 1."""
    x = _ball(x)
    sigma = _check_sigma(sigma)
    out = _upward_formula(x, np.asarray(eta, dtype=float), sigma)
    return float(out) if np.ndim(out) == 0 else out


def apk_upward_grad(x, eta, sigma: float) -> np.ndarray:
    """Gradient in x of :func:`apk_upward`; shape broadcast(x, eta) + (3,)."""
    x = _ball(x)
    sigma = _check_sigma(sigma)
    eta = np.asarray(eta, dtype=float)
    x2 = np.sum(x * x, axis=-1)[..., None]
    dist = sigma * sigma + x2 - 2.0 * sigma * np.sum(x * eta, axis=-1)[..., None]
    return -_INV_4PI * (
        2.0 * x / dist ** 1.5 + 3.0 * (sigma * sigma - x2) * (x - sigma * eta) / dist ** 2.5
    )


# --------------------------------------------------------------------------
# Series
# --------------------------------------------------------------------------


def zonal_series(rho, u, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """sum_n (n+0.5)^4 (2n+1)/(4 pi) rho^n P_n(u), elementwise over arrays."""
    rho, u = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(u, dtype=float))
    shape = rho.shape
    vals, nterms = _jit.zonal_h2_series(
        np.ascontiguousarray(rho.ravel()), np.ascontiguousarray(np.clip(u, -1.0, 1.0).ravel()),
        ctl.rel_floor, ctl.consecutive_small, ctl.max_terms,
    )
    if np.any(nterms < 0):
        raise SeriesTruncationError(
            f"H2 series not converged within {ctl.max_terms} terms "
            f"(rho up to {rho.max():.6f})"
        )
    return vals.reshape(shape)


def h2_norm_sq_apk(x, ctl: SeriesControl = DEFAULT_SERIES):
    """||P(x,.)||^2_{H2} = sum_n (2n+1)/(4 pi) (n+0.5)^4 |x|^{2n}."""
    x = _ball(x)
    r2 = np.sum(x * x, axis=-1)
    out = zonal_series(r2, np.ones_like(r2), ctl)
    return float(out) if out.ndim == 0 else out


def h2_norm_grad_apk(x, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """Gradient of :func:`h2_norm_sq_apk`, always parallel to x."""
    x = _ball(x)
    c, n = _jit.h2_norm_grad_series(float(np.linalg.norm(x)), ctl.rel_floor,
                                    ctl.consecutive_small, ctl.max_terms)
    if n < 0:
        raise SeriesTruncationError(f"H2 norm gradient not converged within {ctl.max_terms} terms")
    return c * x


def _centers(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.linalg.norm(x, axis=-1)
    safe = np.where(r > 0, r, 1.0)[..., None]
    xi = np.where(r[..., None] > 0, x / safe, np.array([0.0, 0.0, 1.0]))
    return r, xi


def _dot3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # fixed summation order keeps (a, b) and (b, a) bitwise identical
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def apk_apk_block(x1, x2, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """Matrix of <P(x1_i,.), P(x2_k,.)>_{H2}; shapes (m, 3), (k, 3) -> (m, k)."""
    x1 = _ball(np.atleast_2d(x1))
    x2 = _ball(np.atleast_2d(x2))
    r1, xi1 = _centers(x1)
    r2, xi2 = _centers(x2)
    rho = r1[:, None] * r2[None, :]
    u = _dot3(xi1[:, None, :], xi2[None, :, :])
    return zonal_series(rho, u, ctl)


def apk_apk_gram(x, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """Symmetric Gram matrix of kernels ``x`` (m, 3), summing each pair once."""
    x = _ball(np.atleast_2d(x))
    m = x.shape[0]
    r, xi = _centers(x)
    iu, ju = np.triu_indices(m)
    vals = zonal_series(r[iu] * r[ju], _dot3(xi[iu], xi[ju]), ctl)
    out = np.empty((m, m))
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def sh_apk_block(nj, x) -> np.ndarray:
    """Matrix of <Y_{n,j}, P(x_k,.)>_{H2} = (n+0.5)^4 |x_k|^n Y_{n,j}(x_k/|x_k|)."""
    nj = np.asarray(nj, dtype=int).reshape(-1, 2)
    x = _ball(np.atleast_2d(x))
    if nj.shape[0] == 0 or x.shape[0] == 0:
        return np.zeros((nj.shape[0], x.shape[0]))
    nmax = int(nj[:, 0].max())
    r, phi, t = cartesian_to_polar(x)
    y = sh_all(nmax, phi, t, sin_polar(x))[nj[:, 0] ** 2 + nj[:, 0] + nj[:, 1]]
    n = nj[:, 0][:, None]
    return (n + 0.5) ** 4 * r[None, :] ** n * y


def sh_sh_block(nj1, nj2) -> np.ndarray:
    nj1 = np.asarray(nj1, dtype=int).reshape(-1, 2)
    nj2 = np.asarray(nj2, dtype=int).reshape(-1, 2)
    same = (nj1[:, None, 0] == nj2[None, :, 0]) & (nj1[:, None, 1] == nj2[None, :, 1])
    return np.where(same, (nj1[:, None, 0] + 0.5) ** 4, 0.0)


def h2_gram(elements_a, elements_b=None, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """H2 inner products between two element sequences (one sequence: Gram matrix)."""
    sym = elements_b is None
    sa, nja, pa, xa = split_elements(elements_a)
    if sym:
        sb, njb, pb, xb = sa, nja, pa, xa
    else:
        sb, njb, pb, xb = split_elements(elements_b)
    out = np.zeros((len(elements_a), len(elements_b) if not sym else len(elements_a)))
    out[np.ix_(sa, sb)] = sh_sh_block(nja, njb)
    if len(sa) and len(pb):
        out[np.ix_(sa, pb)] = sh_apk_block(nja, xb)
    if len(pa) and len(sb):
        out[np.ix_(pa, sb)] = sh_apk_block(njb, xa).T
    if len(pa) and len(pb):
        out[np.ix_(pa, pb)] = apk_apk_gram(xa, ctl) if sym else apk_apk_block(xa, xb, ctl)
    return out


def h2_inner(d1, d2, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """<d1, d2>_{H2} for two dictionary elements."""
    return float(h2_gram([d1], [d2], ctl)[0, 0])


# --------------------------------------------------------------------------
# Gradients in the kernel parameter
# --------------------------------------------------------------------------


def apk_apk_grad(x_others, x, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """Gradients in x of <P(x_other_i,.), P(x,.)>_{H2}; returns (m, 3)."""
    x_others = _ball(np.atleast_2d(x_others))
    x = _ball(x)
    ro, xio = _centers(x_others)
    r, xi = _centers(x[None, :])
    r, xi = r[0], xi[0]
    u = np.clip(xio @ xi, -1.0, 1.0)
    a, b, nterms = _jit.zonal_h2_series_grad(
        np.ascontiguousarray(ro), np.full(ro.shape, r), np.ascontiguousarray(u),
        ctl.rel_floor, ctl.consecutive_small, ctl.max_terms,
    )
    if np.any(nterms < 0):
        raise SeriesTruncationError(f"H2 gradient series not converged within {ctl.max_terms} terms")
    return a[:, None] * xi[None, :] + b[:, None] * (xio - u[:, None] * xi[None, :])


def h2_inner_grad_apk(d_other, x, ctl: SeriesControl = DEFAULT_SERIES) -> np.ndarray:
    """Gradient in x of <d_other, P(x,.)>_{H2}."""
    if isinstance(d_other, SphericalHarmonic):
        return (d_other.n + 0.5) ** 4 * grad_solid_sh(d_other.n, d_other.j, x)
    if isinstance(d_other, AbelPoisson):
        return apk_apk_grad(np.asarray(d_other.x), x, ctl)[0]
    raise TypeError(f"unsupported dictionary element {d_other!r}")
