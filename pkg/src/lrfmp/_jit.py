"""Compiled inner loops: normalized Legendre tables and the zonal Sobolev series.

Everything here works on flat float64 arrays and is wrapped by the public
modules, which own validation and error reporting.
"""
import math

import numba
import numpy as np

_INV_4PI = 1.0 / (4.0 * math.pi)


@numba.njit(cache=True)
def normalized_legendre_tables(nmax, t, s):
    """Fully normalized associated Legendre values and their quotient by ``s``.

    ``pbar[n, m, k]`` is sqrt((2n+1)/(4 pi) (n-m)!/(n+m)!) P_{n,m}(t_k) with
    P_{n,m} = (1-t^2)^{m/2} d^m/dt^m P_n (no Condon-Shortley phase), and
    ``q[n, m, k] = pbar[n, m, k] / s_k`` for m >= 1, obtained from the same
    recurrence started one power of s lower, so it stays finite at the poles.
    Column ``nmax + 1`` is zero padding.
    """
    npts = t.shape[0]
    pbar = np.zeros((nmax + 1, nmax + 2, npts))
    q = np.zeros((nmax + 1, nmax + 2, npts))
    for k in range(npts):
        tk = t[k]
        sk = s[k]
        pbar[0, 0, k] = math.sqrt(_INV_4PI)
        for m in range(nmax + 1):
            if m > 0:
                q[m, m, k] = math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * pbar[m - 1, m - 1, k]
                pbar[m, m, k] = q[m, m, k] * sk
            if m + 1 <= nmax:
                c = math.sqrt(2.0 * m + 3.0) * tk
                pbar[m + 1, m, k] = c * pbar[m, m, k]
                q[m + 1, m, k] = c * q[m, m, k]
            for n in range(m + 2, nmax + 1):
                a = math.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
                b = math.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
                pbar[n, m, k] = a * (tk * pbar[n - 1, m, k] - b * pbar[n - 2, m, k])
                q[n, m, k] = a * (tk * q[n - 1, m, k] - b * q[n - 2, m, k])
    return pbar, q


@numba.njit(cache=True)
def zonal_h2_series(rho, u, rel_floor, consecutive, max_terms):
    """sum_n (n+1/2)^4 (2n+1)/(4 pi) rho^n P_n(u) for each pair (rho_k, u_k).

    Stops after ``consecutive`` envelope terms (the series with P_n replaced by
    its bound 1) each fall below ``rel_floor`` times the running envelope sum.
    ``nterms[k] == -1`` flags a pair that reached ``max_terms`` first.
    """
    npts = rho.shape[0]
    out = np.zeros(npts)
    nterms = np.zeros(npts, dtype=np.int64)
    for k in range(npts):
        r = rho[k]
        x = u[k]
        p_prev = 0.0
        p = 1.0
        pw = 1.0
        total = 0.0
        env = 0.0
        small = 0
        n = 0
        while True:
            if n >= max_terms:
                n = -1
                break
            if n > 0:
                p_next = ((2.0 * n - 1.0) * x * p - (n - 1.0) * p_prev) / n
                p_prev = p
                p = p_next
            h = n + 0.5
            e = h * h * h * h * (2.0 * n + 1.0) * _INV_4PI * pw
            total += e * p
            env += e
            if e < rel_floor * env:
                small += 1
            else:
                small = 0
            n += 1
            if small >= consecutive:
                break
            pw *= r
        out[k] = total
        nterms[k] = n
    return out, nterms


@numba.njit(cache=True)
def zonal_h2_series_grad(r_other, r, u, rel_floor, consecutive, max_terms):
    """Radial and tangential coefficients of grad_x of the zonal Sobolev series.

    With rho = r_other * r the gradient of
    sum_n (n+1/2)^4 (2n+1)/(4 pi) r_other^n |x|^n P_n(xi_other . x/|x|)
    equals ``a * xi + b * (xi_other - u * xi)``, where
    a = sum_n w_n r_other^n r^(n-1) n P_n(u) and
    b = sum_n w_n r_other^n r^(n-1) P_n'(u).
    """
    npts = r.shape[0]
    acoef = np.zeros(npts)
    bcoef = np.zeros(npts)
    nterms = np.zeros(npts, dtype=np.int64)
    for k in range(npts):
        ro = r_other[k]
        rho = ro * r[k]
        x = u[k]
        # n = 1 start: P_0 = 1, P_1 = x, P_1' = 1, P_0' = 0
        p_prev = 1.0
        p = x
        dp_prev = 0.0
        dp = 1.0
        pw = 1.0
        a = 0.0
        b = 0.0
        env = 0.0
        small = 0
        n = 1
        while True:
            if n > max_terms:
                n = -1
                break
            if n > 1:
                p_next = ((2.0 * n - 1.0) * x * p - (n - 1.0) * p_prev) / n
                dp_next = dp_prev + (2.0 * n - 1.0) * p
                p_prev = p
                p = p_next
                dp_prev = dp
                dp = dp_next
            h = n + 0.5
            w = h * h * h * h * (2.0 * n + 1.0) * _INV_4PI * ro * pw
            a += w * n * p
            b += w * dp
            e = w * (n + 0.5 * n * (n + 1.0))
            env += e
            if e < rel_floor * env:
                small += 1
            else:
                small = 0
            n += 1
            if small >= consecutive:
                break
            pw *= rho
        acoef[k] = a
        bcoef[k] = b
        nterms[k] = n
    return acoef, bcoef, nterms


@numba.njit(cache=True)
def h2_norm_grad_series(r, rel_floor, consecutive, max_terms):
    """Radial factor c with grad_x ||P(x,.)||^2_{H2} = c * x.

    c = sum_{n>=1} (2n^2+n)/(2 pi) (n+1/2)^4 r^(2n-2). Returns (c, nterms).
    """
    r2 = r * r
    pw = 1.0
    total = 0.0
    small = 0
    n = 1
    while True:
        if n > max_terms:
            return total, -1
        h = n + 0.5
        e = (2.0 * n * n + n) / (2.0 * math.pi) * h * h * h * h * pw
        total += e
        if e < rel_floor * total:
            small += 1
        else:
            small = 0
        n += 1
        if small >= consecutive:
            return total, n
        pw *= r2
