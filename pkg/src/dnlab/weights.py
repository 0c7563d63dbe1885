"""Edge-weight sequences b_1, b_2, ... along a ray, with exact tail sums.

A family knows ``sum_{k>=1} 1/b_k`` and the remainder ``sum_{k>D} 1/b_k`` in
closed form, which is what certifies summability (and hence transience and
an N-point harmonic boundary) for star graphs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import zeta

from .errors import SpecError


@dataclass(frozen=True)
class WeightFamily:
    """``kind`` is one of "geometric" (b_k = scale*ratio**k), "power"
    (b_k = scale*k**ratio) or "constant" (b_k = scale)."""

    kind: str
    ratio: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("geometric", "power", "constant"):
            raise SpecError(f"unknown weight family {self.kind!r}")
        if self.scale <= 0:
            raise SpecError("weight scale must be positive")
        if self.kind == "geometric" and self.ratio <= 0:
            raise SpecError("geometric ratio must be positive")

    def weight(self, k: int) -> float:
        if k < 1:
            raise ValueError("ray edges are numbered from 1")
        if self.kind == "geometric":
            return self.scale * self.ratio**k
        if self.kind == "power":
            return self.scale * float(k) ** self.ratio
        return self.scale

    @property
    def summable(self) -> bool:
        if self.kind == "geometric":
            return self.ratio > 1
        if self.kind == "power":
            return self.ratio > 1
        return False

    def inv_sum(self) -> float:
        """sum_{k>=1} 1/b_k (inf when not summable)."""
        return self.tail_inv_sum(0)

    def tail_inv_sum(self, depth: int) -> float:
        """sum_{k>depth} 1/b_k."""
        if not self.summable:
            return math.inf
        if self.kind == "geometric":
            r = self.ratio
            return r ** (-depth) / (self.scale * (r - 1.0))
        return float(zeta(self.ratio, depth + 1)) / self.scale

    def partial_inv_sums(self, depth: int) -> list[float]:
        """[sum_{l<=k} 1/b_l for k = 1..depth], summed in order."""
        out, acc = [], 0.0
        for k in range(1, depth + 1):
            acc += 1.0 / self.weight(k)
            out.append(acc)
        return out

    def label(self) -> str:
        s = f"{self.kind}:{self.ratio:g}" if self.kind != "constant" else "constant"
        return s if self.scale == 1.0 else f"{s}*{self.scale:g}"


def parse_family(text: str) -> WeightFamily:
    """Parse ``geometric:2``, ``power:2.5``, ``constant`` or ``constant:3``,
    optionally followed by ``*scale``."""
    text = text.strip()
    scale = 1.0
    if "*" in text:
        text, s = text.split("*", 1)
        scale = _num(s)
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "constant":
        return WeightFamily("constant", 1.0, scale * (_num(arg) if arg else 1.0))
    if kind in ("geometric", "power"):
        if not arg:
            raise SpecError(f"weight family {kind!r} needs a parameter, e.g. {kind}:2")
        return WeightFamily(kind, _num(arg), scale)
    raise SpecError(f"unknown weight family {text!r}")


def _num(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise SpecError(f"not a number: {s!r}") from None
