"""Finite-difference checks of the analytic gradients (used by ``lrfmp gradcheck``)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continuation import ProblemSetup
from .elements import AbelPoisson, SphericalHarmonic
from .grids import reuter_grid
from .kernels import apk_upward, apk_upward_grad, h2_norm_grad_apk, h2_norm_sq_apk
from .learner import rfmp_objective_and_grad
from .pursuit import PursuitState, step


@dataclass
class CheckRow:
    name: str
    cases: int
    worst_rel: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst_rel <= self.tol


def central_difference(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    e = np.eye(len(x)) * h
    return np.array([(f(x + d) - f(x - d)) / (2 * h) for d in e])


def _rel(g: np.ndarray, fd: np.ndarray) -> float:
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-300))


def random_ball_point(rng, rmin: float, rmax: float) -> np.ndarray:
    v = rng.normal(size=3)
    return rng.uniform(rmin, rmax) * v / np.linalg.norm(v)


def random_state(rng, gamma: int = 8, sigma: float = 1.06, n_terms: int = 6,
                 sh_degree: int = 6) -> PursuitState:
    """Pursuit state with a random residual and a random mixed SH/APK expansion."""
    grid = reuter_grid(gamma)
    setup = ProblemSetup(grid, sigma, rng.normal(size=len(grid)))
    state = PursuitState(setup, capacity=n_terms)
    elems = []
    for k in range(n_terms):
        if k % 2 == 0:
            n = int(rng.integers(0, sh_degree + 1))
            d = SphericalHarmonic(n, int(rng.integers(-n, n + 1)))
        else:
            d = AbelPoisson(tuple(random_ball_point(rng, 0.2, 0.9)))
        if d not in elems:
            elems.append(d)
    state.add_elements(elems)
    for pos in range(len(elems)):
        step(state, pos, float(rng.normal()))
    state.residual = rng.normal(size=len(grid))
    return state


def gradient_check(seed: int = 0, n_states: int = 100, tol: float = 1e-5) -> list[CheckRow]:
    """Compare every analytic gradient against central differences (step 1e-6)."""
    rng = np.random.default_rng(seed)
    eta = reuter_grid(6).points
    rows = []

    worst = 0.0
    for _ in range(n_states):
        x = random_ball_point(rng, 0.1, 0.95)
        e = eta[rng.integers(len(eta))]
        g = apk_upward_grad(x, e, 1.06)
        fd = central_difference(lambda z: float(apk_upward(z, e, 1.06)), x)
        worst = max(worst, _rel(g, fd))
    rows.append(CheckRow("upward kernel", n_states, worst, tol))

    worst = 0.0
    for _ in range(n_states):
        x = random_ball_point(rng, 0.1, 0.95)
        worst = max(worst, _rel(h2_norm_grad_apk(x), central_difference(h2_norm_sq_apk, x)))
    rows.append(CheckRow("kernel H2 norm", n_states, worst, tol))

    worst = 0.0
    for k in range(n_states):
        state = random_state(rng)
        lam = 0.0 if k % 2 == 0 else 1e-2
        x = random_ball_point(rng, 0.1, 0.95)
        _, g = rfmp_objective_and_grad(x, state, lam)
        fd = central_difference(lambda z: rfmp_objective_and_grad(z, state, lam)[0], x)
        worst = max(worst, _rel(g, fd))
    rows.append(CheckRow("RFMP objective", n_states, worst, tol))
    return rows


def format_table(rows) -> str:
    lines = [f"{'check':<16} {'cases':>6} {'worst rel':>11} {'tol':>8}  result"]
    for r in rows:
        lines.append(f"{r.name:<16} {r.cases:>6} {r.worst_rel:>11.3e} {r.tol:>8.0e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
