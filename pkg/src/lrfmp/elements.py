"""Trial functions that may appear in a dictionary."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError
from .spherical import check_index


@dataclass(frozen=True)
class SphericalHarmonic:
    """Fully normalized spherical harmonic Y_{n,j}."""

    n: int
    j: int

    def __post_init__(self):
        check_index(self.n, self.j)

    kind = "SH"

    @property
    def params(self) -> str:
        return f"{self.n} {self.j}"


@dataclass(frozen=True)
class AbelPoisson:
    """Abel-Poisson kernel P(x, .) with x = h * xi strictly inside the unit ball."""

    x: tuple[float, float, float]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        if len(x) != 3 or not all(np.isfinite(x)):
            raise DomainError("kernel parameter must be a finite 3-vector")
        if np.linalg.norm(x) >= 1.0:
            raise DomainError(f"kernel parameter {x} is not inside the unit ball")
        object.__setattr__(self, "x", x)

    kind = "APK"

    @property
    def h(self) -> float:
        return float(np.linalg.norm(self.x))

    @property
    def xi(self) -> np.ndarray:
        x = np.asarray(self.x)
        h = np.linalg.norm(x)
        return x / h if h > 0 else np.array([0.0, 0.0, 1.0])

    @property
    def params(self) -> str:
        return " ".join(f"{v:.17g}" for v in self.x)


DictionaryElement = Union[SphericalHarmonic, AbelPoisson]


def split_elements(elements) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Positions and parameters of each element class.

    Returns ``(sh_pos, sh_nj, apk_pos, apk_x)`` with ``sh_nj`` of shape (k, 2)
    and ``apk_x`` of shape (m, 3).
    """
    sh_pos, sh_nj, apk_pos, apk_x = [], [], [], []
    for i, d in enumerate(elements):
        if isinstance(d, SphericalHarmonic):
            sh_pos.append(i)
            sh_nj.append((d.n, d.j))
        elif isinstance(d, AbelPoisson):
            apk_pos.append(i)
            apk_x.append(d.x)
        else:
            raise TypeError(f"unsupported dictionary element {d!r}")
    return (
        np.asarray(sh_pos, dtype=int),
        np.asarray(sh_nj, dtype=int).reshape(-1, 2),
        np.asarray(apk_pos, dtype=int),
        np.asarray(apk_x, dtype=float).reshape(-1, 3),
    )
