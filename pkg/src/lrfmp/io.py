"""Model, expansion, grid and diagnostics files; field evaluation; error metrics.

All floats are written with 17 significant digits so every file round-trips
exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .continuation import operator_matrix
from .dictionary import parse_element
from .elements import AbelPoisson, SphericalHarmonic, split_elements
from .grids import SphereGrid
from .kernels import SeriesControl, apk_eval
from .learner import LearnConfig, OptimizerConfig
from .pursuit import PursuitConfig
from .spherical import sh_all_cartesian


def fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass
class GroundTruthModel:
    terms: list = field(default_factory=list)  # (coefficient, element)
    description: str = ""

    def __post_init__(self):
        for c, d in self.terms:
            if not math.isfinite(c):
                raise ValueError(f"non-finite coefficient for {d}")
            if not isinstance(d, (SphericalHarmonic, AbelPoisson)):
                raise TypeError(f"unsupported element {d!r}")

    def __len__(self) -> int:
        return len(self.terms)


def _write_terms(path, terms, header_lines, coeff_first: bool) -> None:
    lines = [f"# {h}" for h in header_lines]
    for c, d in terms:
        if coeff_first:
            lines.append(f"{fmt(c)} {d.kind} {d.params}")
        else:
            lines.append(f"{d.kind} {d.params} {fmt(c)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_terms(path, coeff_first: bool) -> tuple[list, list]:
    terms, comments = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        tokens = line.split()
        try:
            if coeff_first:
                c, d = float(tokens[0]), parse_element(tokens[1:])
            else:
                c, d = float(tokens[-1]), parse_element(tokens[:-1])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not math.isfinite(c):
            raise ValueError(f"{path}:{lineno}: non-finite coefficient")
        terms.append((c, d))
    return terms, comments


def read_model(path) -> GroundTruthModel:
    """Lines ``SH n j coeff`` / ``APK x1 x2 x3 coeff``; ``#`` lines are comments."""
    terms, comments = _read_terms(path, coeff_first=False)
    return GroundTruthModel(terms, "\n".join(comments))


def write_model(model: GroundTruthModel, path) -> None:
    header = model.description.splitlines() if model.description else []
    _write_terms(path, model.terms, header, coeff_first=False)


def write_expansion(expansion, path, metadata: dict | None = None) -> None:
    """Lines ``alpha SH n j`` / ``alpha APK x1 x2 x3`` in selection order."""
    header = [f"{k} = {json.dumps(v)}" for k, v in (metadata or {}).items()]
    _write_terms(path, expansion, header, coeff_first=True)


def read_expansion(path) -> list:
    return _read_terms(path, coeff_first=True)[0]


def surface_matrix(elements, eta) -> np.ndarray:
    """Rows d_i(eta) on the unit sphere; shape (len(elements), len(eta))."""
    eta = np.asarray(eta, dtype=float).reshape(-1, 3)
    sh_pos, nj, apk_pos, x = split_elements(elements)
    out = np.empty((len(sh_pos) + len(apk_pos), eta.shape[0]))
    if len(sh_pos):
        out[sh_pos] = sh_all_cartesian(int(nj[:, 0].max()), eta)[nj[:, 0] ** 2 + nj[:, 0] + nj[:, 1]]
    for i, xi in zip(apk_pos, x):
        out[i] = apk_eval(xi, eta)
    return out


def evaluate_field(terms, grid: SphereGrid, at_height: float | None = None) -> np.ndarray:
    """sum_i c_i d_i on the grid, or (T sum_i c_i d_i)(sigma eta) when at_height=sigma."""
    if isinstance(terms, GroundTruthModel):
        terms = terms.terms
    terms = list(terms)
    if not terms:
        return np.zeros(len(grid))
    c = np.array([a for a, _ in terms], dtype=float)
    elems = [d for _, d in terms]
    if at_height is None:
        return c @ surface_matrix(elems, grid.points)
    return c @ operator_matrix(elems, grid.points, at_height)


def error_metrics(approx, truth) -> tuple[float, float, float]:
    """(||a - t|| / ||t||, max |a - t|, rms(a - t))."""
    approx = np.asarray(approx, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if approx.shape != truth.shape:
        raise ValueError("approximation and truth differ in shape")
    diff = approx - truth
    tn = np.linalg.norm(truth)
    rel = np.linalg.norm(diff) / tn if tn > 0 else (0.0 if not diff.any() else math.inf)
    if diff.size == 0:
        return float(rel), 0.0, 0.0
    return float(rel), float(np.abs(diff).max()), float(np.sqrt(np.mean(diff * diff)))


# ---- CSV ------------------------------------------------------------------


def write_grid_csv(grid: SphereGrid, path) -> None:
    lon, lat = grid.lon_lat_deg()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "x", "y", "z", "lon_deg", "lat_deg"])
        for i, (p, lo, la) in enumerate(zip(grid.points, lon, lat)):
            w.writerow([i, fmt(p[0]), fmt(p[1]), fmt(p[2]), fmt(lo), fmt(la)])


def read_grid_csv(path) -> SphereGrid:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pts = np.array([[float(r["x"]), float(r["y"]), float(r["z"])] for r in rows]).reshape(-1, 3)
    return SphereGrid(pts)


def write_data_csv(values, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in enumerate(values):
            w.writerow([i, fmt(v)])


def read_data_csv(path) -> np.ndarray:
    """Values of an ``index,value`` CSV; indices must run 0, 1, 2, ..."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    values = []
    for k, r in enumerate(rows):
        try:
            if int(r["index"]) != k:
                raise ValueError(f"expected index {k}, found {r['index']}")
            values.append(float(r["value"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{k + 2}: {exc}") from None
    return np.array(values)


DIAGNOSTICS_HEADER = ["iter", "lambda", "res_norm", "rel_data_error", "elem_kind",
                      "elem_params", "alpha", "objective"]


def write_diagnostics_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTICS_HEADER)
        for r in records:
            w.writerow([r.iter, fmt(r.lam), fmt(r.res_norm), fmt(r.rel_data_error),
                        r.element.kind, r.element.params, fmt(r.alpha), fmt(r.objective)])


def write_field_csv(grid: SphereGrid, values, path) -> None:
    lon, lat = grid.lon_lat_deg()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lon_deg", "lat_deg", "value"])
        for lo, la, v in zip(lon, lat, values):
            w.writerow([fmt(lo), fmt(la), fmt(v)])


# ---- experiment configuration ----------------------------------------------


@dataclass
class ExperimentConfig:
    """Everything needed to rerun a learnt-vs-manual comparison."""

    data_gamma: int = 30
    eval_gamma: int = 45
    sigma: float = 1.06
    model: str | None = None  # None: random ground truth drawn with truth_seed
    truth_seed: int = 0
    noise_level: float = 0.0
    noise_seed: int | None = None
    manual_max_degree: int = 10
    manual_gamma: int = 24
    manual_radii: list = field(default_factory=lambda: [0.75, 0.85, 0.91, 0.94])
    manual_lambda: float = 1e-2
    # optional lambda scans; each method keeps its best value
    learn_lambdas: list | None = None
    manual_lambdas: list | None = None
    manual_modes: list = field(default_factory=lambda: ["fixed"])
    start_max_degree: int = 20
    start_gamma: int = 15
    start_radius: float = 0.94
    pursuit: PursuitConfig = field(default_factory=lambda: PursuitConfig(
        lambda0=1e-2, lambda_mode="nonstationary", max_iter=300, min_coeff_stop=1e-5))
    learn: LearnConfig = field(default_factory=lambda: LearnConfig(force_sh_first=30))
    out_dir: str = "out"

    def __post_init__(self):
        if self.data_gamma == self.eval_gamma:
            raise ValueError("the evaluation grid must differ from the data grid")

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "pursuit" in d:
            p = dict(d["pursuit"])
            if "series" in p:
                p["series"] = SeriesControl(**p["series"])
            d["pursuit"] = PursuitConfig(**p)
        if "learn" in d:
            lc = dict(d["learn"])
            if "opt" in lc:
                lc["opt"] = OptimizerConfig(**lc["opt"])
            d["learn"] = LearnConfig(**lc)
        return cls(**d)

    @classmethod
    def read(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")
