"""Legendre polynomials, fully normalized spherical harmonics and gradients of
their solid (harmonic) extensions into the ball.

Points on the sphere are described by polar coordinates ``(phi, t)`` with
``phi`` the longitude in radians and ``t`` the cosine of the polar angle.
Real harmonics use the L2(sphere)-orthonormal convention

    Y_{n,j} = sqrt((2n+1)/(4 pi) (n-|j|)!/(n+|j|)!) P_{n,|j|}(t) * trig_j(phi)

with trig_j = sqrt(2) cos(j phi) for j < 0, 1 for j = 0 and sqrt(2) sin(j phi)
for j > 0. Arrays of all harmonics up to degree N use the flat index
``n*n + n + j``.
"""
from __future__ import annotations

import functools
import math
from typing import NamedTuple

import numpy as np

from . import _jit
from .errors import DomainError

_T_SLACK = 1e-12


class LocalBasis(NamedTuple):
    """Up/East/North orthonormal frame at a point of the sphere."""

    e_r: np.ndarray
    e_phi: np.ndarray
    e_t: np.ndarray


def sh_index(n: int, j: int) -> int:
    """Flat position of Y_{n,j} in arrays ordered by degree, then order."""
    check_index(n, j)
    return n * n + n + j


def sh_degree_order(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays matching the flat ordering up to ``nmax``."""
    n = np.concatenate([np.full(2 * k + 1, k) for k in range(nmax + 1)])
    j = np.concatenate([np.arange(-k, k + 1) for k in range(nmax + 1)])
    return n, j


def check_index(n: int, j: int) -> None:
    if n < 0 or abs(j) > n:
        raise DomainError(f"invalid spherical harmonic index (n={n}, j={j})")


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + _T_SLACK) or np.any(np.isnan(t)):
        raise DomainError("t must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def cartesian_to_polar(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(r, phi, t)`` for Cartesian points of shape (..., 3).

    The origin is mapped to the north pole direction.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    safe = np.where(r > 0.0, r, 1.0)
    t = np.where(r > 0.0, x[..., 2] / safe, 1.0)
    phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * np.pi)
    return r, phi, np.clip(t, -1.0, 1.0)


def sin_polar(x) -> np.ndarray:
    """sqrt(1 - t^2) computed from the Cartesian components, accurate near the poles."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    return np.where(r > 0.0, np.hypot(x[..., 0], x[..., 1]) / np.where(r > 0.0, r, 1.0), 0.0)


def polar_to_cartesian(phi, t) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    t = _check_t(t)
    s = np.sqrt(1.0 - t * t)
    return np.stack([s * np.cos(phi), s * np.sin(phi), t], axis=-1)


# --------------------------------------------------------------------------
# Legendre polynomials
# --------------------------------------------------------------------------


def legendre_table(nmax: int, t) -> tuple[np.ndarray, np.ndarray]:
    """P_0..P_nmax and their derivatives at ``t``; shape (nmax+1, *t.shape).

    Derivatives use P_n' = P_{n-2}' + (2n-1) P_{n-1}, which has no division
    by 1 - t^2 and is exact at the endpoints.
    """
    t = _check_t(t)
    p = np.zeros((nmax + 1,) + t.shape)
    dp = np.zeros_like(p)
    p[0] = 1.0
    if nmax >= 1:
        p[1] = t
        dp[1] = 1.0
    for n in range(2, nmax + 1):
        p[n] = ((2 * n - 1) * t * p[n - 1] - (n - 1) * p[n - 2]) / n
        dp[n] = dp[n - 2] + (2 * n - 1) * p[n - 1]
    return p, dp


def legendre_p(n: int, t):
    """Legendre polynomial P_n(t) by the Bonnet three-term recurrence."""
    if n < 0:
        raise DomainError("degree must be non-negative")
    p, _ = legendre_table(n, t)
    out = p[n]
    return float(out) if out.ndim == 0 else out


def legendre_p_deriv(n: int, t):
    """First derivative P_n'(t); equals n(n+1)/2 * (+-1)^(n-1) at t = +-1."""
    if n < 0:
        raise DomainError("degree must be non-negative")
    _, dp = legendre_table(n, t)
    out = dp[n]
    return float(out) if out.ndim == 0 else out


def assoc_legendre(n: int, j: int, t):
    """Associated Legendre function (1-t^2)^{j/2} d^j/dt^j P_n(t), 0 <= j <= n.

    Seeded with P_{j,j} = (2j-1)!! (1-t^2)^{j/2} and run upwards in degree.
    No Condon-Shortley sign is applied.
    """
    if j < 0 or j > n:
        raise DomainError(f"order must satisfy 0 <= j <= n (got n={n}, j={j})")
    t = _check_t(t)
    s = np.sqrt(1.0 - t * t)
    p_mm = np.ones_like(t)
    for k in range(1, j + 1):
        p_mm = p_mm * (2 * k - 1) * s
    if n == j:
        out = p_mm
    else:
        p_prev, p = p_mm, (2 * j + 1) * t * p_mm
        for k in range(j + 2, n + 1):
            p_prev, p = p, ((2 * k - 1) * t * p - (k + j - 1) * p_prev) / (k - j)
        out = p
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Spherical harmonics
# --------------------------------------------------------------------------


def _tables(nmax: int, t: np.ndarray, s: np.ndarray | None = None):
    flat = np.ascontiguousarray(t.ravel())
    if s is None:
        s = np.sqrt(np.maximum(1.0 - flat * flat, 0.0))
    else:
        s = np.ascontiguousarray(np.broadcast_to(s, t.shape).ravel(), dtype=float)
    pbar, q = _jit.normalized_legendre_tables(int(nmax), flat, s)
    return pbar, q


def _trig(nmax: int, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(nmax + 1)[:, None]
    return np.cos(m * phi[None, :]), np.sin(m * phi[None, :])


@functools.lru_cache(maxsize=64)
def _flat_layout(nmax: int):
    """Degree, |order| and a factor selecting cos (j<0), 1 (j=0) or sin (j>0) per flat index."""
    n, j = sh_degree_order(nmax)
    m = np.abs(j)
    return n, m, np.sign(j)


def _spread(nmax: int, table: np.ndarray, cos_m: np.ndarray, sin_m: np.ndarray) -> np.ndarray:
    """Combine an (n, |j|) table with the longitude factors into flat order."""
    n, m, sign = _flat_layout(nmax)
    trig = np.where((sign < 0)[:, None], cos_m[m], sin_m[m])
    trig = np.where((sign == 0)[:, None], 1.0, math.sqrt(2.0) * trig)
    return table[n, m] * trig


def sh_all(nmax: int, phi, t, s=None) -> np.ndarray:
    """All Y_{n,j} with n <= nmax at the given points; shape ((nmax+1)^2, *shape).

    ``s`` optionally supplies sqrt(1 - t^2) when a more accurate value is known.
    """
    t = _check_t(t)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), t.shape)
    pbar, _ = _tables(nmax, t, s)
    cos_m, sin_m = _trig(nmax, phi.ravel())
    return _spread(nmax, pbar, cos_m, sin_m).reshape(((nmax + 1) ** 2,) + t.shape)


def sh_all_cartesian(nmax: int, xi) -> np.ndarray:
    """All Y_{n,j} at the directions of nonzero vectors of shape (..., 3)."""
    _, phi, t = cartesian_to_polar(xi)
    return sh_all(nmax, phi, t, sin_polar(xi))


def sh_eval(n: int, j: int, phi, t):
    """Fully normalized real spherical harmonic Y_{n,j}(phi, t)."""
    check_index(n, j)
    out = sh_all(n, phi, t)[n * n + n + j]
    return float(out) if out.ndim == 0 else out


def sh_phi_derivative(n: int, j: int, phi, t):
    """d/dphi Y_{n,j} = j * Y_{n,-j}."""
    check_index(n, j)
    if j == 0:
        out = np.zeros(np.broadcast(np.asarray(phi), np.asarray(t)).shape)
        return float(out) if out.ndim == 0 else out
    return j * sh_eval(n, -j, phi, t)


def local_basis(phi, t, s=None) -> LocalBasis:
    """Local frame (e_r, e_phi, e_t) at (phi, t); vectors along the last axis."""
    phi = np.asarray(phi, dtype=float)
    t = _check_t(t)
    phi, t = np.broadcast_arrays(phi, t)
    s = np.sqrt(1.0 - t * t) if s is None else np.broadcast_to(s, t.shape)
    c, sn = np.cos(phi), np.sin(phi)
    e_r = np.stack([s * c, s * sn, t], axis=-1)
    e_phi = np.stack([-sn, c, np.zeros_like(t)], axis=-1)
    e_t = np.stack([-t * c, -t * sn, s], axis=-1)
    return LocalBasis(e_r, e_phi, e_t)


# --------------------------------------------------------------------------
# Gradients of solid harmonics
# --------------------------------------------------------------------------


def _check_ball(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise DomainError("points must be 3-vectors")
    if np.any(np.linalg.norm(x, axis=-1) >= 1.0):
        raise DomainError("point must lie strictly inside the unit ball")
    return x


def grad_solid_sh_all(nmax: int, x) -> np.ndarray:
    """Gradients of |x|^n Y_{n,j}(x/|x|) for all n <= nmax.

    ``x`` has shape (npts, 3) or (3,); the result has shape
    ((nmax+1)^2, npts, 3) or ((nmax+1)^2, 3). The radial/angular split is
    assembled from pole-regular factors: j/sqrt(1-t^2) Y_{n,-j} uses the
    quotient table, and sqrt(1-t^2) d/dt of the normalized Legendre function
    becomes -|j| t Q_{n,|j|} + sqrt((n-|j|)(n+|j|+1)) Pbar_{n,|j|+1}.
    """
    x = _check_ball(x)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    r, phi, t = cartesian_to_polar(pts)
    pbar, q = _tables(nmax, t, sin_polar(pts))
    cos_m, sin_m = _trig(nmax, phi)

    # sqrt(1-t^2) * d/dt Pbar_{n,m}
    n_idx = np.arange(nmax + 1)[:, None, None]
    m_idx = np.arange(nmax + 2)[None, :, None]
    lift = np.sqrt(np.maximum((n_idx - m_idx) * (n_idx + m_idx + 1), 0))
    shifted = np.zeros_like(pbar)
    shifted[:, :-1] = pbar[:, 1:]
    dtheta = -m_idx * t[None, None, :] * q + lift * shifted

    y = _spread(nmax, pbar, cos_m, sin_m)
    # j/s * Y_{n,-j}: +m pairs with the cosine, -m with minus the sine
    n_f, m_f, sign = _flat_layout(nmax)
    swapped = np.where((sign > 0)[:, None], cos_m[m_f], -sin_m[m_f])
    phi_part = (math.sqrt(2.0) * m_f)[:, None] * q[n_f, m_f] * swapped
    t_part = _spread(nmax, dtheta, cos_m, sin_m)

    basis = local_basis(phi, t, sin_polar(pts))
    degrees = sh_degree_order(nmax)[0].astype(float)
    rpow = np.zeros(((nmax + 1) ** 2, r.shape[0]))
    for n in range(1, nmax + 1):
        rpow[n * n:(n + 1) ** 2] = r ** (n - 1)
    grad = (
        (degrees[:, None] * y * rpow)[..., None] * basis.e_r[None]
        + (rpow * phi_part)[..., None] * basis.e_phi[None]
        + (rpow * t_part)[..., None] * basis.e_t[None]
    )
    grad[0] = 0.0
    return grad[:, 0] if single else grad


def grad_solid_sh(n: int, j: int, x) -> np.ndarray:
    """Gradient of |x|^n Y_{n,j}(x/|x|) at a point strictly inside the ball."""
    check_index(n, j)
    return grad_solid_sh_all(n, x)[n * n + n + j]


def grad_solid_legendre(n: int, xi_other, x) -> np.ndarray:
    """Gradient of |x|^n P_n(xi_other . x/|x|) for a unit vector ``xi_other``.

    Written in the local frame at x/|x|:
    |x|^(n-1) [e_r n P_n(u) + e_phi P_n'(u) (xi_other . e_phi)
    + e_t P_n'(u) (xi_other . e_t)] with u = xi_other . e_r.
    """
    x = _check_ball(x)
    xi_other = np.asarray(xi_other, dtype=float)
    if abs(np.linalg.norm(xi_other) - 1.0) > 1e-10:
        raise DomainError("xi_other must be a unit vector")
    if n == 0:
        return np.zeros(3)
    r, phi, t = cartesian_to_polar(x)
    if r == 0.0:
        return xi_other.copy() if n == 1 else np.zeros(3)
    basis = local_basis(phi, t, sin_polar(x))
    u = float(np.clip(xi_other @ basis.e_r, -1.0, 1.0))
    p, dp = legendre_table(n, u)
    return r ** (n - 1) * (
        basis.e_r * n * p[n]
        + basis.e_phi * dp[n] * (xi_other @ basis.e_phi)
        + basis.e_t * dp[n] * (xi_other @ basis.e_t)
    )
