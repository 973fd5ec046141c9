"""Ordered dictionaries of spherical harmonics and Abel-Poisson kernels.

File format (``.dict``): ``#``-prefixed ``key = json`` metadata lines followed
by one element per line, ``SH n j`` or ``APK x1 x2 x3``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .elements import AbelPoisson, SphericalHarmonic
from .grids import SphereGrid, grid_with_radii

ORIGINS = ("manual", "starting", "learnt")
DEFAULT_DEDUPE_TOL = 1e-10


@dataclass(frozen=True)
class Dictionary:
    elements: tuple
    origin: str = "manual"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        elements = tuple(self.elements)
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown dictionary origin {self.origin!r}")
        if len(set(elements)) != len(elements):
            raise ValueError("dictionary contains duplicate elements")
        object.__setattr__(self, "elements", elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def counts(self) -> dict:
        n_sh = sum(isinstance(d, SphericalHarmonic) for d in self.elements)
        return {"SH": n_sh, "APK": len(self) - n_sh}

    def write(self, path) -> None:
        lines = [f"# origin = {json.dumps(self.origin)}"]
        lines += [f"# {k} = {json.dumps(v)}" for k, v in self.metadata.items()]
        for d in self.elements:
            lines.append(f"{d.kind} {d.params}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path) -> "Dictionary":
        origin, meta, elements = "manual", {}, []
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if not sep:
                    continue
                key, value = key.strip(), json.loads(value)
                if key == "origin":
                    origin = value
                else:
                    meta[key] = value
                continue
            try:
                elements.append(parse_element(line.split()))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
        return cls(tuple(elements), origin, meta)


def parse_element(tokens) -> SphericalHarmonic | AbelPoisson:
    """Element from ``["SH", n, j]`` or ``["APK", x1, x2, x3]`` tokens."""
    kind = tokens[0]
    if kind == "SH" and len(tokens) == 3:
        return SphericalHarmonic(int(tokens[1]), int(tokens[2]))
    if kind == "APK" and len(tokens) == 4:
        return AbelPoisson(tuple(float(v) for v in tokens[1:]))
    raise ValueError(f"cannot parse element {' '.join(tokens)!r}")


def sh_block(max_degree: int) -> list[SphericalHarmonic]:
    return [SphericalHarmonic(n, j) for n in range(max_degree + 1) for j in range(-n, n + 1)]


def manual_dictionary(max_degree: int, grid: SphereGrid, radii) -> Dictionary:
    """All harmonics up to ``max_degree`` followed by kernels r * xi, radius-major."""
    radii = list(radii)
    kernels = [AbelPoisson(tuple(x)) for x in grid_with_radii(grid, radii)]
    meta = {"max_degree": max_degree, "gamma": grid.gamma, "grid_size": len(grid), "radii": radii}
    return Dictionary(tuple(sh_block(max_degree) + kernels), "manual", meta)


def starting_dictionary(max_degree: int, grid: SphereGrid, radius: float) -> Dictionary:
    """Harmonics up to ``max_degree`` plus kernels on a single radius."""
    d = manual_dictionary(max_degree, grid, [radius])
    meta = dict(d.metadata, radii=[radius])
    return Dictionary(d.elements, "starting", meta)


def find_close(elements, d, tol: float = DEFAULT_DEDUPE_TOL) -> int | None:
    """Position of an element equal to ``d`` (kernels: within Euclidean ``tol``)."""
    if isinstance(d, SphericalHarmonic):
        for i, e in enumerate(elements):
            if e == d:
                return i
        return None
    x = np.asarray(d.x)
    for i, e in enumerate(elements):
        if isinstance(e, AbelPoisson) and np.linalg.norm(np.asarray(e.x) - x) <= tol:
            return i
    return None


def dedupe_append(dictionary: Dictionary, d, tol: float = DEFAULT_DEDUPE_TOL) -> Dictionary:
    """Copy of ``dictionary`` with ``d`` appended unless an equal element exists."""
    if find_close(dictionary.elements, d, tol) is not None:
        return dictionary
    return Dictionary(dictionary.elements + (d,), dictionary.origin, dict(dictionary.metadata))
