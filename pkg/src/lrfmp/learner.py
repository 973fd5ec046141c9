"""Learning RFMP: grow a dictionary from harmonics and freely placed kernels.

Every iteration computes three candidates -- the best harmonic of degree
<= sh_max_degree, the best cached kernel, and a kernel obtained by
maximizing the RFMP objective over the closed ball |x| <= r_max starting
from the best cached one -- and takes the one with the largest objective.
The chosen elements, in order of first selection, form the learnt
dictionary.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import ProblemSetup
from .dictionary import DEFAULT_DEDUPE_TOL, Dictionary, sh_block
from .elements import AbelPoisson, SphericalHarmonic
from .kernels import (
    _upward_formula,
    apk_apk_grad,
    apk_upward_grad,
    h2_norm_grad_apk,
    h2_norm_sq_apk,
    zonal_series,
)
from .pursuit import (
    DENOMINATOR_FLOOR,
    IterationRecord,
    PursuitConfig,
    PursuitState,
    lambda_schedule,
    objectives,
    optimal_alpha,
    step,
)
from .spherical import cartesian_to_polar, grad_solid_sh_all, sh_all, sin_polar

log = logging.getLogger(__name__)

R_MAX = 0.98999999
X_FLOOR = 1e-12


@dataclass
class OptimizerConfig:
    max_opt_iter: int = 200
    grad_tol: float = 1e-6
    step_tol: float = 1e-12
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    multistart: int = 1
    initial_step: float = 0.05

    def __post_init__(self):
        if min(self.max_opt_iter, self.grad_tol, self.step_tol, self.multistart,
               self.initial_step) <= 0:
            raise ValueError("optimizer settings must be positive")
        if not (0 < self.armijo_c < 1 and 0 < self.backtrack_factor < 1):
            raise ValueError("armijo_c and backtrack_factor must lie in (0, 1)")


@dataclass
class LearnConfig:
    sh_max_degree: int | None = None  # None: use the harmonics of the starting dictionary
    r_max: float = R_MAX
    force_sh_first: int = 250
    obj_scale: float | str = "auto"
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if not 0 < self.r_max < 1:
            raise ValueError("r_max must lie in (0, 1)")
        if self.force_sh_first < 0:
            raise ValueError("force_sh_first must be >= 0")
        if self.obj_scale != "auto" and not float(self.obj_scale) > 0:
            raise ValueError("obj_scale must be 'auto' or positive")


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    status: str  # converged | stalled | iteration-capped | failed
    n_iter: int
    history: list = field(default_factory=list, repr=False)


@dataclass
class LearnRecord(IterationRecord):
    source: str = "SH"
    opt_status: str | None = None
    candidates: dict = field(default_factory=dict)  # objective of each candidate class


@dataclass
class LearnResult:
    dictionary: Dictionary
    expansion: list
    diagnostics: list
    reason: str
    state: PursuitState = field(repr=False)


# --------------------------------------------------------------------------
# Objective of a free kernel
# --------------------------------------------------------------------------


class ExpansionTerms:
    """The post-restart approximation F_n split into harmonic and kernel parts.

    Repeated picks of one element are merged, since <F_n, P(x,.)>_{H2} is
    linear in the coefficients.
    """

    def __init__(self, state: PursuitState):
        coef: dict = {}
        for alpha, pos in state.current:
            coef[pos] = coef.get(pos, 0.0) + alpha
        sh = [(state.elements[p], c) for p, c in coef.items()
              if isinstance(state.elements[p], SphericalHarmonic)]
        apk = [(state.elements[p], c) for p, c in coef.items()
               if isinstance(state.elements[p], AbelPoisson)]
        self.sh_nmax = max((d.n for d, _ in sh), default=-1)
        self.sh_index = np.array([d.n * d.n + d.n + d.j for d, _ in sh], dtype=int)
        self.sh_weight = np.array([c * (d.n + 0.5) ** 4 for d, c in sh])
        self.sh_degree = np.array([d.n for d, _ in sh], dtype=float)
        self.apk_x = np.array([d.x for d, _ in apk], dtype=float).reshape(-1, 3)
        self.apk_coef = np.array([c for _, c in apk])

    def __len__(self) -> int:
        return len(self.sh_index) + len(self.apk_coef)

    def inner_and_grad(self, x: np.ndarray, ctl) -> tuple[float, np.ndarray]:
        """<F_n, P(x,.)>_{H2} and its gradient in x."""
        val, grad = 0.0, np.zeros(3)
        if len(self.sh_index):
            r, phi, t = cartesian_to_polar(x)
            y = sh_all(self.sh_nmax, phi, t, sin_polar(x))[self.sh_index]
            val += float(self.sh_weight @ (r ** self.sh_degree * y))
            g = grad_solid_sh_all(self.sh_nmax, x)[self.sh_index]
            grad += self.sh_weight @ g
        if len(self.apk_coef):
            r = np.linalg.norm(x)
            xi = x / r if r > 0 else np.array([0.0, 0.0, 1.0])
            ro = np.linalg.norm(self.apk_x, axis=1)
            xio = self.apk_x / np.where(ro > 0, ro, 1.0)[:, None]
            u = np.clip(xio @ xi, -1.0, 1.0)
            val += float(self.apk_coef @ zonal_series(ro * r, u, ctl))
            grad += self.apk_coef @ apk_apk_grad(self.apk_x, x, ctl)
        return val, grad


def rfmp_objective_and_grad(x, state: PursuitState, lam: float, ctl=None,
                            terms: ExpansionTerms | None = None) -> tuple[float, np.ndarray]:
    """RFMP(P(x,.); n) and its gradient with respect to the kernel parameter x.

    Numerator a1 - lam a2 with a1 = <R^n, T P(x,.)>, a2 = <F_n, P(x,.)>_{H2};
    denominator b1 + lam b2 with b1 = ||T P(x,.)||^2, b2 = ||P(x,.)||^2_{H2}.
    The gradient follows from the quotient rule.
    """
    ctl = ctl or state.series
    x = np.asarray(x, dtype=float)
    terms = terms if terms is not None else ExpansionTerms(state)
    setup = state.setup
    tp = _upward_formula(x[None, :], setup.eta, setup.sigma)
    dtp = apk_upward_grad(x[None, :], setup.eta, setup.sigma)
    a1 = float(state.residual @ tp)
    da1 = state.residual @ dtp
    b1 = float(tp @ tp)
    db1 = 2.0 * tp @ dtp
    b2 = h2_norm_sq_apk(x, ctl)
    db2 = h2_norm_grad_apk(x, ctl)
    if lam != 0.0 and len(terms):
        a2, da2 = terms.inner_and_grad(x, ctl)
    else:
        a2, da2 = 0.0, np.zeros(3)
    num = a1 - lam * a2
    dnum = da1 - lam * da2
    den = b1 + lam * b2
    dden = db1 + lam * db2
    if den < DENOMINATOR_FLOOR:
        return math.nan, np.full(3, math.nan)
    value = num * num / den
    grad = (2.0 * num * dnum * den - num * num * dden) / (den * den)
    return value, grad


# --------------------------------------------------------------------------
# Ball-constrained ascent
# --------------------------------------------------------------------------


def project_ball(x: np.ndarray, radius: float) -> np.ndarray:
    r = np.linalg.norm(x)
    if r > radius:
        x = x * (radius / r)
        # rounding can leave |x| a hair above radius
        while np.linalg.norm(x) > radius:
            x = x * (1.0 - 1e-16)
    elif r < X_FLOOR:
        x = x + np.array([0.0, 0.0, X_FLOOR - r])
    return x


def _projected_gradient(x: np.ndarray, g: np.ndarray, radius: float) -> np.ndarray:
    r = np.linalg.norm(x)
    if r >= radius * (1.0 - 1e-12):
        outward = g @ x / r
        if outward > 0:
            return g - outward * x / r
    return g


def projected_gradient_ascent(fun, x0, radius: float, opt: OptimizerConfig,
                              scale: float | str = "auto") -> OptimizeResult:
    """Maximize ``fun`` (returning value, gradient) over the ball |x| <= radius.

    Steps move along the unit gradient direction, x <- P(x + t g/|g|), with
    Armijo backtracking on the step length t. The step length starts at
    ``opt.initial_step``, doubles after an accepted step and is never tied to
    the gradient magnitude, so positive rescaling of the objective changes
    nothing but the meaning of ``grad_tol``.
    """
    x = project_ball(np.asarray(x0, dtype=float), radius)
    f, g = fun(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        return OptimizeResult(x, f, "failed", 0)
    s = 1.0 / max(abs(f), 1e-30) if scale == "auto" else float(scale)
    fs, gs = s * f, s * g
    history = [f]
    t = opt.initial_step
    status = "iteration-capped"
    k = 0
    for k in range(1, opt.max_opt_iter + 1):
        pg = _projected_gradient(x, gs, radius)
        if np.linalg.norm(pg) < opt.grad_tol:
            status = "converged"
            break
        direction = gs / np.linalg.norm(gs)
        accepted = False
        while True:
            x_new = project_ball(x + t * direction, radius)
            move = x_new - x
            if np.linalg.norm(move) < opt.step_tol:
                break
            f_new, g_new = fun(x_new)
            # the unscaled test guards against rounding in s * f
            if (np.isfinite(f_new) and f_new >= f
                    and s * f_new >= fs + opt.armijo_c * (gs @ move)):
                accepted = True
                break
            t *= opt.backtrack_factor
        if not accepted:
            status = "stalled"
            break
        x, f, g = x_new, f_new, g_new
        fs, gs = s * f, s * g
        history.append(f)
        t = min(2.0 * t, 2.0 * radius)
    else:
        k = opt.max_opt_iter
    return OptimizeResult(x, f, status, k, history)


def apk_optimize(start, state: PursuitState, lam: float, cfg: LearnConfig,
                 terms: ExpansionTerms | None = None) -> OptimizeResult:
    """Locally maximize RFMP(P(x,.); n) over |x| <= r_max from ``start``."""
    start = np.asarray(start, dtype=float)
    if np.linalg.norm(start) > cfg.r_max:
        raise ValueError("optimizer start lies outside the feasible ball")
    terms = terms if terms is not None else ExpansionTerms(state)

    def fun(x):
        return rfmp_objective_and_grad(x, state, lam, state.series, terms)

    return projected_gradient_ascent(fun, start, cfg.r_max, cfg.opt, cfg.obj_scale)


# --------------------------------------------------------------------------
# Candidates
# --------------------------------------------------------------------------


def _best(values: np.ndarray, positions: np.ndarray) -> tuple[int, float]:
    k = int(np.argmax(values[positions]))
    return int(positions[k]), float(values[positions[k]])


def sh_candidate(state: PursuitState, lam: float, values: np.ndarray | None = None):
    """Best cached harmonic: (position, objective)."""
    values = objectives(state, lam) if values is None else values
    return _best(values, state.sh_positions)


def apk_local_candidate(state: PursuitState, lam: float, values: np.ndarray | None = None):
    """Best cached kernel (starting set plus kernels learnt so far)."""
    values = objectives(state, lam) if values is None else values
    return _best(values, state.apk_positions)


def arbitrate(cands, n: int, cfg: LearnConfig) -> int:
    """Index into ``cands`` = [(tag, value), ...] ordered SH, APK-local, APK-opt.

    Inside the forcing window the harmonic wins; afterwards the largest value,
    earlier candidates winning ties. Entries with value None (failed
    optimization) are skipped.
    """
    if n < cfg.force_sh_first:
        return 0
    best, best_val = 0, -math.inf
    for i, (_, val) in enumerate(cands):
        if val is not None and np.isfinite(val) and val > best_val:
            best, best_val = i, val
    return best


def learn(setup: ProblemSetup, start_dict: Dictionary, learn_cfg: LearnConfig | None = None,
          pursuit_cfg: PursuitConfig | None = None) -> LearnResult:
    """Run the learning RFMP and return the learnt dictionary and expansion."""
    learn_cfg = learn_cfg or LearnConfig()
    pursuit_cfg = pursuit_cfg or PursuitConfig(min_coeff_stop=1e-5)
    if learn_cfg.sh_max_degree is None:
        harmonics = [d for d in start_dict if isinstance(d, SphericalHarmonic)]
    else:
        harmonics = sh_block(learn_cfg.sh_max_degree)
    kernels = [d for d in start_dict if isinstance(d, AbelPoisson)]
    if not harmonics or not kernels:
        raise ValueError("the starting dictionary needs harmonics and kernels")
    if any(d.h > learn_cfg.r_max for d in kernels):
        raise ValueError("starting kernels must satisfy |x| <= r_max")

    state = PursuitState(setup, pursuit_cfg.series,
                         capacity=len(harmonics) + len(kernels) + 64)
    state.add_elements(harmonics + kernels)

    learnt_pos: list = []
    unlock: list = []
    seen: set = set()
    diagnostics = []
    y_norm = state.r0_norm
    reason = "max_iter"
    if y_norm == 0.0:
        return LearnResult(Dictionary((), "learnt"), [], [], "zero data", state)

    while state.iter < pursuit_cfg.max_iter:
        n = state.iter
        lam = lambda_schedule(pursuit_cfg, n, state.r0_norm)
        values = objectives(state, lam)
        sh_pos, sh_val = sh_candidate(state, lam, values)
        loc_pos, loc_val = apk_local_candidate(state, lam, values)
        cands = [("SH", sh_val), ("APK-local", loc_val)]
        opt_res = None
        if n >= learn_cfg.force_sh_first:
            terms = ExpansionTerms(state)
            apk = state.apk_positions
            order = apk[np.argsort(-values[apk], kind="stable")][: learn_cfg.opt.multistart]
            for p in order:
                res = apk_optimize(np.asarray(state.elements[p].x), state, lam, learn_cfg, terms)
                if res.status != "failed" and (opt_res is None or res.value > opt_res.value):
                    opt_res = res
            cands.append(("APK-opt", None if opt_res is None else opt_res.value))
        choice = arbitrate(cands, n, learn_cfg)
        source = cands[choice][0]
        if source == "SH":
            pos = sh_pos
        elif source == "APK-local":
            pos = loc_pos
        else:
            pos = state.ensure(AbelPoisson(tuple(opt_res.x)), DEFAULT_DEDUPE_TOL)
        value = float(values[pos]) if pos < len(values) else opt_res.value
        alpha = optimal_alpha(state, pos, lam)
        step(state, pos, alpha)
        if pos not in seen:
            seen.add(pos)
            learnt_pos.append(pos)
            unlock.append(n)
        res_norm = float(np.linalg.norm(state.residual))
        diagnostics.append(LearnRecord(
            n + 1, lam, res_norm, res_norm / y_norm, state.elements[pos], alpha, value,
            source, None if opt_res is None else opt_res.status, dict(cands),
        ))
        if opt_res is not None and opt_res.status in ("stalled", "iteration-capped"):
            log.debug("iteration %d: optimizer %s after %d steps", n + 1, opt_res.status,
                      opt_res.n_iter)
        if pursuit_cfg.restart_every and state.iter % pursuit_cfg.restart_every == 0:
            state.restart()
        if res_norm / y_norm < pursuit_cfg.rel_data_error_stop:
            reason = "data error"
            break
        if pursuit_cfg.min_coeff_stop is not None and abs(alpha) < pursuit_cfg.min_coeff_stop:
            reason = "small coefficient"
            break

    meta = {
        "start_size": len(start_dict),
        "force_sh_first": learn_cfg.force_sh_first,
        "r_max": learn_cfg.r_max,
        "lambda0": pursuit_cfg.lambda0,
        "lambda_mode": pursuit_cfg.lambda_mode,
        "iterations": state.iter,
        "unlock_iter": unlock,
    }
    learnt = Dictionary(tuple(state.elements[p] for p in learnt_pos), "learnt", meta)
    return LearnResult(learnt, list(state.expansion), diagnostics, reason, state)
