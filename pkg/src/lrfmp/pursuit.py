"""Regularized functional matching pursuit (RFMP).

Each iteration adds the element d and coefficient alpha minimizing the
Tikhonov functional

    J(F_n + alpha d) = ||y - T(F_n + alpha d)||^2 + lambda_n ||F_n + alpha d||^2_{H2},

which amounts to maximizing

    RFMP(d; n) = (<R^n, T d> - lambda_n <F_n, d>_{H2})^2 / (||T d||^2 + lambda_n ||d||^2_{H2})

over the dictionary; the maximum equals the decrease of J.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .continuation import ProblemSetup, operator_matrix
from .dictionary import DEFAULT_DEDUPE_TOL, Dictionary
from .elements import AbelPoisson, SphericalHarmonic, split_elements
from .errors import DegenerateElementError
from .kernels import DEFAULT_SERIES, SeriesControl, h2_gram

log = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-300


@dataclass
class PursuitConfig:
    lambda0: float = 1e-2
    lambda_mode: str = "fixed"  # or "nonstationary"
    max_iter: int = 3000
    rel_data_error_stop: float = 1e-8
    min_coeff_stop: float | None = None
    restart_every: int = 0
    growing_dictionary: bool = False
    growing_schedule: str = "selection"  # or "index"
    series: SeriesControl = DEFAULT_SERIES

    def __post_init__(self):
        if self.lambda_mode not in ("fixed", "nonstationary"):
            raise ValueError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.growing_schedule not in ("selection", "index"):
            raise ValueError(f"unknown growing_schedule {self.growing_schedule!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.lambda0 < 0 or self.rel_data_error_stop < 0 or self.restart_every < 0:
            raise ValueError("thresholds must be non-negative")
        if self.min_coeff_stop is not None and self.min_coeff_stop < 0:
            raise ValueError("min_coeff_stop must be non-negative")


@dataclass
class IterationRecord:
    iter: int
    lam: float
    res_norm: float
    rel_data_error: float
    element: object
    alpha: float
    objective: float


@dataclass
class PursuitResult:
    expansion: list
    diagnostics: list
    reason: str
    state: "PursuitState" = field(repr=False)


class PursuitState:
    """Residual, expansion and all cached products for one pursuit run.

    Caches are stored per element position: ``td`` (rows T d_i on the data
    grid), ``td_norm_sq``, ``h2_norm_sq``, the H2 ``gram`` matrix and
    ``f_inner`` = <F_n, d_i>_{H2}, where F_n is the approximation since the
    last restart. Elements can be appended at any time.
    """

    def __init__(self, setup: ProblemSetup, series: SeriesControl = DEFAULT_SERIES,
                 capacity: int = 64):
        self.setup = setup
        self.series = series
        self.elements: list = []
        ell = len(setup.grid)
        self.td = np.zeros((capacity, ell))
        self.td_norm_sq = np.zeros(capacity)
        self.h2_norm_sq = np.zeros(capacity)
        self.gram = np.zeros((capacity, capacity))
        self.f_inner = np.zeros(capacity)
        self.residual = setup.y.copy()
        self.r0_norm = float(np.linalg.norm(setup.y))
        self.expansion: list = []
        self.current: list = []  # (alpha, position) since the last restart
        self.reg_norm_sq = 0.0
        self.iter = 0
        self._sh_pos: dict = {}
        self._apk_pos: list = []
        self._apk_x = np.zeros((0, 3))

    def __len__(self) -> int:
        return len(self.elements)

    def _grow(self, needed: int) -> None:
        cap = self.td.shape[0]
        if needed <= cap:
            return
        new = max(needed, 2 * cap)
        m = len(self.elements)

        def widen(a, shape):
            out = np.zeros(shape)
            out[tuple(slice(0, s) for s in a.shape)] = a
            return out

        self.td = widen(self.td[:m], (new, self.td.shape[1]))
        self.td_norm_sq = widen(self.td_norm_sq[:m], (new,))
        self.h2_norm_sq = widen(self.h2_norm_sq[:m], (new,))
        self.f_inner = widen(self.f_inner[:m], (new,))
        self.gram = widen(self.gram[:m, :m], (new, new))

    def add_elements(self, new) -> np.ndarray:
        """Append elements, computing every cache entry they need; returns positions."""
        new = list(new)
        m = len(self.elements)
        k = len(new)
        if k == 0:
            return np.zeros(0, dtype=int)
        self._grow(m + k)
        rows = operator_matrix(new, self.setup.eta, self.setup.sigma)
        sl = slice(m, m + k)
        self.td[sl] = rows
        self.td_norm_sq[sl] = np.einsum("ij,ij->i", rows, rows)
        block = h2_gram(new, None, self.series)
        self.gram[sl, sl] = block
        self.h2_norm_sq[sl] = np.diag(block)
        if m:
            cross = h2_gram(self.elements, new, self.series)
            self.gram[:m, sl] = cross
            self.gram[sl, :m] = cross.T
        f = np.zeros(k)
        for alpha, pos in self.current:
            f += alpha * self.gram[pos, sl]
        self.f_inner[sl] = f
        for i, d in enumerate(new, start=m):
            if isinstance(d, SphericalHarmonic):
                self._sh_pos[d] = i
            else:
                self._apk_pos.append(i)
        _, _, _, x = split_elements([d for d in new if isinstance(d, AbelPoisson)])
        self._apk_x = np.concatenate([self._apk_x, x])
        self.elements.extend(new)
        return np.arange(m, m + k)

    def position(self, d, tol: float = DEFAULT_DEDUPE_TOL) -> int | None:
        """Cached position of ``d`` (kernels within ``tol``), or None."""
        if isinstance(d, SphericalHarmonic):
            return self._sh_pos.get(d)
        if not self._apk_pos:
            return None
        dist = np.linalg.norm(self._apk_x - np.asarray(d.x), axis=1)
        i = int(np.argmin(dist))
        return self._apk_pos[i] if dist[i] <= tol else None

    def ensure(self, d, tol: float = DEFAULT_DEDUPE_TOL) -> int:
        pos = self.position(d, tol)
        if pos is None:
            pos = int(self.add_elements([d])[0])
        return pos

    @property
    def apk_positions(self) -> np.ndarray:
        return np.asarray(self._apk_pos, dtype=int)

    @property
    def sh_positions(self) -> np.ndarray:
        return np.asarray(sorted(self._sh_pos.values()), dtype=int)

    def numerators(self, lam: float, limit: int | None = None) -> np.ndarray:
        m = len(self.elements) if limit is None else min(limit, len(self.elements))
        return self.td[:m] @ self.residual - lam * self.f_inner[:m]

    def denominators(self, lam: float, limit: int | None = None) -> np.ndarray:
        m = len(self.elements) if limit is None else min(limit, len(self.elements))
        return self.td_norm_sq[:m] + lam * self.h2_norm_sq[:m]

    def recompute_reg_norm_sq(self) -> float:
        """||F_n||^2_{H2} of the post-restart approximation from the Gram cache."""
        if not self.current:
            return 0.0
        a = np.array([c for c, _ in self.current])
        p = np.array([i for _, i in self.current])
        return float(a @ self.gram[np.ix_(p, p)] @ a)

    def restart(self) -> None:
        """Reset F_n and the regularization term; the residual is kept."""
        exact = self.recompute_reg_norm_sq()
        drift = abs(exact - self.reg_norm_sq)
        if drift > 1e-8 * max(exact, 1e-300):
            log.warning("H2 norm tracking drifted by %.3g (relative) before restart",
                        drift / max(exact, 1e-300))
        self.f_inner[: len(self.elements)] = 0.0
        self.reg_norm_sq = 0.0
        self.current = []


def preprocess(dictionary: Dictionary, setup: ProblemSetup,
               cfg: PursuitConfig | None = None) -> PursuitState:
    """Fill all caches for a stored dictionary; F_0 = 0 so R^0 = y."""
    cfg = cfg or PursuitConfig()
    if len(dictionary) == 0:
        raise ValueError("cannot run a pursuit on an empty dictionary")
    state = PursuitState(setup, cfg.series, capacity=len(dictionary))
    state.add_elements(dictionary.elements)
    return state


def objective(state: PursuitState, pos: int, lam: float) -> float:
    """RFMP(d; n) for the cached element at ``pos``."""
    num = float(state.td[pos] @ state.residual - lam * state.f_inner[pos])
    den = float(state.td_norm_sq[pos] + lam * state.h2_norm_sq[pos])
    if den < DENOMINATOR_FLOOR:
        raise DegenerateElementError(f"element {state.elements[pos]} has zero denominator")
    return num * num / den


def objectives(state: PursuitState, lam: float, limit: int | None = None) -> np.ndarray:
    """RFMP objective of every cached element (degenerate ones score 0)."""
    num = state.numerators(lam, limit)
    den = state.denominators(lam, limit)
    ok = den >= DENOMINATOR_FLOOR
    return np.where(ok, num * num / np.where(ok, den, 1.0), 0.0)


def optimal_alpha(state: PursuitState, pos: int, lam: float) -> float:
    """Coefficient minimizing J(F_n + alpha d) for the element at ``pos``."""
    num = float(state.td[pos] @ state.residual - lam * state.f_inner[pos])
    den = float(state.td_norm_sq[pos] + lam * state.h2_norm_sq[pos])
    if den < DENOMINATOR_FLOOR:
        raise DegenerateElementError(f"element {state.elements[pos]} has zero denominator")
    return num / den


def select(state: PursuitState, lam: float, limit: int | None = None) -> tuple[int, float]:
    """Position and value of the maximal objective; ties go to the lowest position."""
    vals = objectives(state, lam, limit)
    k = int(np.argmax(vals))
    return k, float(vals[k])


def step(state: PursuitState, pos: int, alpha: float) -> PursuitState:
    """Apply F_{n+1} = F_n + alpha d for the element at ``pos`` (in place)."""
    m = len(state.elements)
    state.residual -= alpha * state.td[pos]
    state.reg_norm_sq += 2.0 * alpha * state.f_inner[pos] + alpha * alpha * state.h2_norm_sq[pos]
    state.f_inner[:m] += alpha * state.gram[pos, :m]
    state.expansion.append((alpha, state.elements[pos]))
    state.current.append((alpha, pos))
    state.iter += 1
    return state


def lambda_schedule(cfg: PursuitConfig, n: int, r0_norm: float) -> float:
    """lambda0 (fixed) or lambda0 * ||R^0|| / (n + 1) (non-stationary)."""
    if cfg.lambda_mode == "fixed":
        return cfg.lambda0
    return cfg.lambda0 * r0_norm / (n + 1)


def growing_limits(dictionary: Dictionary, cfg: PursuitConfig):
    """Function n -> number of leading elements selectable at iteration n.

    With the "index" schedule the first n + 1 elements are allowed. A learnt
    dictionary records in ``unlock_iter`` the iteration at which each element
    was first chosen; the "selection" schedule unlocks elements exactly then,
    so the replay never sees a kernel before the learner had created it.
    """
    unlock = dictionary.metadata.get("unlock_iter")
    if cfg.growing_schedule == "index" or unlock is None:
        return lambda n: n + 1
    unlock = np.asarray(unlock, dtype=int)
    if len(unlock) != len(dictionary) or np.any(np.diff(unlock) < 0):
        raise ValueError("unlock_iter must be non-decreasing with one entry per element")
    return lambda n: int(np.searchsorted(unlock, n, side="right"))


def run(dictionary: Dictionary, setup: ProblemSetup, cfg: PursuitConfig | None = None,
        state: PursuitState | None = None) -> PursuitResult:
    """Run the RFMP until an iteration, data-error or coefficient criterion fires."""
    cfg = cfg or PursuitConfig()
    if state is None:
        state = preprocess(dictionary, setup, cfg)
    diagnostics = []
    y_norm = state.r0_norm
    if y_norm == 0.0:
        return PursuitResult([], [], "zero data", state)
    reason = "max_iter"
    limits = growing_limits(dictionary, cfg) if cfg.growing_dictionary else None
    while state.iter < cfg.max_iter:
        n = state.iter
        lam = lambda_schedule(cfg, n, state.r0_norm)
        limit = limits(n) if limits else None
        if limit == 0:
            reason = "no progress"
            break
        pos, value = select(state, lam, limit)
        if not value > 0.0:
            reason = "no progress"
            break
        alpha = optimal_alpha(state, pos, lam)
        step(state, pos, alpha)
        res_norm = float(np.linalg.norm(state.residual))
        diagnostics.append(IterationRecord(n + 1, lam, res_norm, res_norm / y_norm,
                                           state.elements[pos], alpha, value))
        if cfg.restart_every and state.iter % cfg.restart_every == 0:
            state.restart()
        if res_norm / y_norm < cfg.rel_data_error_stop:
            reason = "data error"
            break
        if cfg.min_coeff_stop is not None and abs(alpha) < cfg.min_coeff_stop:
            reason = "small coefficient"
            break
    return PursuitResult(list(state.expansion), diagnostics, reason, state)


def tikhonov_functional(expansion, setup: ProblemSetup, lam: float,
                        series: SeriesControl = DEFAULT_SERIES) -> float:
    """J(F) = ||y - T F||^2 + lam ||F||^2_{H2}, recomputed from scratch."""
    if not expansion:
        return float(setup.y @ setup.y)
    alpha = np.array([a for a, _ in expansion])
    elems = [d for _, d in expansion]
    residual = setup.y - alpha @ operator_matrix(elems, setup.eta, setup.sigma)
    reg = alpha @ h2_gram(elems, None, series) @ alpha
    return float(residual @ residual + lam * reg)


def residual_from_scratch(expansion, setup: ProblemSetup) -> np.ndarray:
    if not expansion:
        return setup.y.copy()
    alpha = np.array([a for a, _ in expansion])
    return setup.y - alpha @ operator_matrix([d for _, d in expansion], setup.eta, setup.sigma)
