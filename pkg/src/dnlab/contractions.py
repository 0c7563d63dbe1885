"""Normal contractions: maps C with |C(r)| <= |r| and |C(r) - C(s)| <= |r - s|."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import VertexFunction

TAGS = ("identity", "abs", "clamp", "truncate", "unit")


@dataclass(frozen=True)
class NormalContraction:
    tag: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown contraction {self.tag!r}")
        if self.tag == "clamp" and not self.a <= 0 <= self.b:
            raise ValueError("clamp(a, b) needs a <= 0 <= b")
        if self.tag == "truncate" and self.a < 0:
            raise ValueError("truncation level must be nonnegative")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.tag == "identity":
            return r.copy()
        if self.tag == "abs":
            return np.abs(r)
        if self.tag == "clamp":
            return np.clip(r, self.a, self.b)
        if self.tag == "truncate":
            return np.clip(r, -self.a, self.a)
        return np.clip(r, 0.0, 1.0)

    def __str__(self):
        if self.tag == "clamp":
            return f"clamp[{self.a:g},{self.b:g}]"
        if self.tag == "truncate":
            return f"truncate[{self.a:g}]"
        return self.tag


def identity() -> NormalContraction:
    return NormalContraction("identity")


def absolute() -> NormalContraction:
    return NormalContraction("abs")


def clamp(a: float, b: float) -> NormalContraction:
    return NormalContraction("clamp", a, b)


def truncate(level: float) -> NormalContraction:
    return NormalContraction("truncate", level)


def unit() -> NormalContraction:
    return NormalContraction("unit")


def library() -> tuple[NormalContraction, ...]:
    """The fixed test family: one member per tag."""
    return (identity(), absolute(), unit(), clamp(-1.0, 1.0), truncate(0.5))


def apply_contraction(C: NormalContraction, f: VertexFunction) -> VertexFunction:
    """C∘f, with C applied to the tail constants as well."""
    return f.map(C)


def is_normal(C: NormalContraction, grid=None) -> bool:
    """Spot check of both contraction inequalities on all pairs of a grid."""
    r = np.linspace(-3, 3, 121) if grid is None else np.asarray(grid, dtype=float)
    cr = C(r)
    if np.any(np.abs(cr) > np.abs(r) + 1e-15):
        return False
    diff = np.abs(cr[:, None] - cr[None, :])
    return bool(np.all(diff <= np.abs(r[:, None] - r[None, :]) + 1e-15))
