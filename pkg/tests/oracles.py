"""Brute-force references computed without the pursuit caches."""
import numpy as np

from lrfmp.continuation import operator_matrix
from lrfmp.kernels import h2_gram


class FreshFunctional:
    """J(F + alpha d) for every candidate d, rebuilt from the expansion alone."""

    def __init__(self, expansion, setup, lam, candidates):
        self.lam = lam
        self.a = np.array([c for c, _ in expansion])
        elems = [d for _, d in expansion]
        y = setup.y
        if elems:
            y = y - self.a @ operator_matrix(elems, setup.eta, setup.sigma)
        self.residual = y
        self.td = operator_matrix(list(candidates), setup.eta, setup.sigma)
        g = h2_gram(elems + list(candidates))
        k = len(elems)
        self.f_norm_sq = float(self.a @ g[:k, :k] @ self.a) if k else 0.0
        self.f_d = self.a @ g[:k, k:] if k else np.zeros(len(candidates))
        self.d_norm_sq = np.diag(g[k:, k:])

    def __call__(self, i, alpha):
        alpha = np.asarray(alpha, dtype=float)
        r = self.residual[None, :] - alpha[..., None] * self.td[i][None, :]
        reg = self.f_norm_sq + 2 * alpha * self.f_d[i] + alpha ** 2 * self.d_norm_sq[i]
        return np.sum(r * r, axis=-1) + self.lam * reg

    def base(self):
        return float(self(0, np.array([0.0]))[0]) if len(self.td) else float(self.residual @ self.residual)


def grid_minimize(fun, lo=-50.0, hi=50.0, points=2001, zooms=6):
    """Minimum of a 1-D quadratic by repeated dense grid search.

    Near a flat minimum the grid only resolves alpha to about sqrt(eps), so
    the grid winner is polished by a three-point parabola fit with a wide
    stencil, which is exact for a quadratic up to rounding.
    """
    width = (hi - lo) / 20
    for _ in range(zooms):
        a = np.linspace(lo, hi, points)
        v = fun(a)
        k = int(np.argmin(v))
        step = a[1] - a[0]
        lo, hi = a[max(k - 1, 0)] - step, a[min(k + 1, points - 1)] + step
    a = np.linspace(lo, hi, points)
    v = fun(a)
    k = int(np.argmin(v))
    c = a[k]
    jm, j0, jp = (float(fun(np.array([c + o]))[0]) for o in (-width, 0.0, width))
    curv = jm - 2 * j0 + jp
    if curv > 0:
        c = c + width * (jm - jp) / (2 * curv)
    return float(c), float(fun(np.array([c]))[0])


def exhaustive_choice(expansion, setup, lam, candidates, alpha_bound=None):
    """Index and (alpha, J) minimizing J(F + alpha d) over all candidates."""
    fresh = FreshFunctional(expansion, setup, lam, candidates)
    best = None
    for i in range(len(candidates)):
        if alpha_bound is None:
            den = fresh.td[i] @ fresh.td[i] + lam * fresh.d_norm_sq[i]
            bound = 4 * np.sqrt(fresh.residual @ fresh.residual / den) + 1.0
        else:
            bound = alpha_bound
        a, v = grid_minimize(lambda al: fresh(i, al), -bound, bound)
        if best is None or v < best[2]:
            best = (i, a, v)
    return best
