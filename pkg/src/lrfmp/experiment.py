"""Learnt-vs-manual comparison on a synthetic downward-continuation problem."""
from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .continuation import ProblemSetup, synthesize_data
from .dictionary import manual_dictionary, starting_dictionary
from .elements import AbelPoisson, SphericalHarmonic
from .grids import reuter_grid
from .io import ExperimentConfig, GroundTruthModel, error_metrics, evaluate_field
from .learner import LearnResult, learn
from .pursuit import PursuitResult, preprocess, run

log = logging.getLogger(__name__)


def random_ground_truth(seed: int = 0, max_degree: int = 10, n_bumps: int = 3,
                        bump_radii=(0.85, 0.93)) -> GroundTruthModel:
    """Band-limited harmonic field plus a few localized kernel bumps.

    Degree-n coefficients are N(0, 1/(n+1)^2); bump centres are uniform on
    the sphere, radii uniform in ``bump_radii`` and coefficients +-[0.05, 0.15].
    """
    rng = np.random.default_rng(seed)
    terms = []
    for n in range(max_degree + 1):
        for j in range(-n, n + 1):
            terms.append((float(rng.normal() / (n + 1)), SphericalHarmonic(n, j)))
    for _ in range(n_bumps):
        v = rng.normal(size=3)
        h = rng.uniform(*bump_radii)
        c = rng.uniform(0.05, 0.15) * rng.choice([-1.0, 1.0])
        terms.append((float(c), AbelPoisson(tuple(h * v / np.linalg.norm(v)))))
    desc = (f"random ground truth: seed={seed} max_degree={max_degree} "
            f"bumps={n_bumps} radii={list(bump_radii)}")
    return GroundTruthModel(terms, desc)


@dataclass
class Problem:
    setup: ProblemSetup
    eval_grid: object
    truth: np.ndarray  # ground truth on the evaluation grid

    def error(self, expansion) -> tuple[float, float, float]:
        return error_metrics(evaluate_field(expansion, self.eval_grid), self.truth)


def build_problem(cfg: ExperimentConfig, model: GroundTruthModel) -> Problem:
    data_grid = reuter_grid(cfg.data_gamma)
    eval_grid = reuter_grid(cfg.eval_gamma)
    y = synthesize_data(model.terms, data_grid, cfg.sigma, cfg.noise_level, cfg.noise_seed)
    return Problem(ProblemSetup(data_grid, cfg.sigma, y), eval_grid,
                   evaluate_field(model, eval_grid))


def learn_and_replay(problem: Problem, cfg: ExperimentConfig) -> tuple[LearnResult, PursuitResult]:
    """LRFMP followed by the growing-mode RFMP on the learnt dictionary."""
    start = starting_dictionary(cfg.start_max_degree, reuter_grid(cfg.start_gamma), cfg.start_radius)
    learnt = learn(problem.setup, start, cfg.learn, cfg.pursuit)
    log.info("lambda0=%g: learnt %d elements in %d iterations (%s)", cfg.pursuit.lambda0,
             len(learnt.dictionary), learnt.state.iter, learnt.reason)
    replay_cfg = replace(cfg.pursuit, growing_dictionary=True, min_coeff_stop=None,
                         max_iter=learnt.state.iter)
    return learnt, run(learnt.dictionary, problem.setup, replay_cfg)


def manual_runs(problem: Problem, cfg: ExperimentConfig, lambdas, modes=("fixed",),
                max_iter: int | None = None) -> list[tuple[str, float, PursuitResult]]:
    """RFMP with the manual dictionary for every (mode, lambda); caches are filled once."""
    manual_dict = manual_dictionary(cfg.manual_max_degree, reuter_grid(cfg.manual_gamma),
                                    cfg.manual_radii)
    base = preprocess(manual_dict, problem.setup, cfg.pursuit)
    out = []
    for mode in modes:
        for lam in lambdas:
            pcfg = replace(cfg.pursuit, lambda0=lam, lambda_mode=mode, growing_dictionary=False,
                           min_coeff_stop=None, max_iter=max_iter or cfg.pursuit.max_iter)
            out.append((mode, lam, run(manual_dict, problem.setup, pcfg, copy.deepcopy(base))))
    return out


@dataclass
class ExperimentResult:
    manual_size: int
    learnt: LearnResult
    replay: PursuitResult
    manual: PursuitResult
    errors: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    chosen: dict = field(default_factory=dict)  # selected lambda per method
    table: list = field(default_factory=list)  # (method, mode, lambda, iterations, rel error)
    data: np.ndarray | None = None
    runs: dict = field(default_factory=dict)  # lambda0 -> (learnt, replay) for every learn run

    @property
    def ratio(self) -> float:
        return self.errors["learnt"][0] / self.errors["manual"][0]


def run_experiment(cfg: ExperimentConfig, model: GroundTruthModel, learn_lambdas=None,
                   manual_lambdas=None, manual_modes=("fixed",)) -> ExperimentResult:
    """Learnt-vs-manual comparison on the evaluation grid.

    Without lambda lists the configured values are used. With lists, each
    method keeps the lambda giving its lowest evaluation error; the manual
    error is measured after as many iterations as the chosen replay ran.
    """
    problem = build_problem(cfg, model)
    timings, table = {}, []
    learn_lambdas = list(learn_lambdas or [cfg.pursuit.lambda0])
    manual_lambdas = list(manual_lambdas or [cfg.manual_lambda])

    best, runs = None, {}
    t0 = time.perf_counter()
    for lam in learn_lambdas:
        c = replace(cfg, pursuit=replace(cfg.pursuit, lambda0=lam))
        learnt, replay = learn_and_replay(problem, c)
        runs[lam] = (learnt, replay)
        err = problem.error(replay.expansion)
        table.append(("learnt", cfg.pursuit.lambda_mode, lam, len(replay.expansion), err[0]))
        if best is None or err[0] < best[0][0]:
            best = (err, lam, learnt, replay)
    timings["learn"] = time.perf_counter() - t0
    learnt_err, learnt_lam, learnt, replay = best
    n_iter = len(replay.expansion)

    t0 = time.perf_counter()
    mbest = None
    for mode, lam, res in manual_runs(problem, cfg, manual_lambdas, manual_modes, n_iter):
        err = problem.error(res.expansion[:n_iter])
        table.append(("manual", mode, lam, min(n_iter, len(res.expansion)), err[0]))
        if mbest is None or err[0] < mbest[0][0]:
            mbest = (err, mode, lam, res)
    timings["manual"] = time.perf_counter() - t0
    manual_err, manual_mode, manual_lam, manual = mbest

    errors = {
        "learnt": learnt_err,
        "manual": manual_err,
        "learner": problem.error(learnt.expansion),
    }
    size = (cfg.manual_max_degree + 1) ** 2 + len(reuter_grid(cfg.manual_gamma)) * len(cfg.manual_radii)
    chosen = {"learnt": learnt_lam, "manual": (manual_mode, manual_lam)}
    return ExperimentResult(size, learnt, replay, manual, errors, timings, chosen, table,
                            problem.setup.y, runs)


def expansion_mismatch(a, b) -> float:
    """Largest coefficient difference between two expansions; inf if elements differ."""
    if len(a) != len(b):
        return float("inf")
    worst = 0.0
    for (ca, da), (cb, db) in zip(a, b):
        if da != db:
            return float("inf")
        worst = max(worst, abs(ca - cb))
    return worst
