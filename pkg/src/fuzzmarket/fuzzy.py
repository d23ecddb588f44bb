"""Linguistic term family, aggregate terms and center-average inference.

Every excess-demand function in the package is a center-average fuzzy system
over the seven piecewise-linear terms below, all scaled by a single width
``w`` (a log-ratio, so ``w=0.01`` reads as "about 1%").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import InvalidInput, InvalidParameter

TERMS = ("PS", "PM", "PL", "NS", "NM", "NL", "AZ")
AGGREGATES = ("P", "N")

# Consequent centers, as fractions of a group's buying/selling power.
CENTERS = {
    "BS": 0.1,
    "BM": 0.2,
    "BB": 0.4,
    "SS": -0.1,
    "SM": -0.2,
    "SB": -0.4,
    "N": 0.0,
}

# Triangle breakpoints (left foot, apex, right foot) of the output sets.
# Reference only: inference uses the centers above, never these shapes.
OUTPUT_SHAPES = {
    "BS": (0.0, 0.1, 0.2),
    "BM": (0.1, 0.2, 0.4),
    "BB": (0.2, 0.4, math.inf),
    "SS": (-0.2, -0.1, 0.0),
    "SM": (-0.4, -0.2, -0.1),
    "SB": (-math.inf, -0.4, -0.2),
    "N": (-0.1, 0.0, 0.1),
}

# Denominators below this make a center average undefined; the result is 0.
EPS_DEN = 1e-12


def _triangle(x: float, apex: float, w: float) -> float:
    d = abs(x - apex)
    if d >= w:
        return 0.0
    return 1.0 - d / w


def _shoulder(x: float, start: float, w: float) -> float:
    # 0 below start, linear ramp over [start, start + w], 1 beyond.
    if x <= start:
        return 0.0
    if x >= start + w:
        return 1.0
    return (x - start) / w


@dataclass(frozen=True)
class TermFamily:
    """The seven input terms PS..NL, AZ for a given width ``w``."""

    w: float

    def __post_init__(self):
        if not isinstance(self.w, (int, float)) or not math.isfinite(self.w) or self.w <= 0:
            raise InvalidParameter(f"term width must be a positive finite number, got {self.w!r}")

    def membership(self, term: str, x: float) -> float:
        if not math.isfinite(x):
            raise InvalidInput(f"membership argument must be finite, got {x!r}")
        w = self.w
        if term == "AZ":
            return _triangle(x, 0.0, w)
        if term in ("NS", "NM", "NL"):
            term = "P" + term[1]
            x = -x
        if term == "PS":
            return _triangle(x, w, w)
        if term == "PM":
            return _triangle(x, 2.0 * w, w)
        if term == "PL":
            return _shoulder(x, 2.0 * w, w)
        if term in AGGREGATES:
            return self.aggregate("Positive" if term == "P" else "Negative", x)
        raise InvalidParameter(f"unknown term {term!r}")

    def aggregate(self, sign: str, x: float) -> float:
        """Union (max) of the three positive or three negative terms."""
        if sign in ("Positive", "P"):
            labels = ("PS", "PM", "PL")
        elif sign in ("Negative", "N"):
            labels = ("NS", "NM", "NL")
        else:
            raise InvalidParameter(f"aggregate sign must be Positive or Negative, got {sign!r}")
        return max(self.membership(label, x) for label in labels)


def make_term_family(w: float) -> TermFamily:
    return TermFamily(float(w) if isinstance(w, int) else w)


def membership(family: TermFamily, term: str, x: float) -> float:
    return family.membership(term, x)


def aggregate_membership(family: TermFamily, sign: str, x: float) -> float:
    return family.aggregate(sign, x)


class Firing(NamedTuple):
    """One rule's contribution: firing degree and consequent center."""

    degree: float
    center: float


def center_average(firings: Iterable[tuple[float, float]]) -> float:
    """Center-average defuzzification; 0 when nothing fires.

    The result is a convex combination of the fired centers, so it is
    clamped to their range to absorb rounding (``d * 0.4 / d`` can exceed
    0.4 by one ulp).
    """
    num = 0.0
    den = 0.0
    lo, hi = math.inf, -math.inf
    for degree, center in firings:
        num += degree * center
        den += degree
        if degree > 0:
            lo, hi = min(lo, center), max(hi, center)
    if den < EPS_DEN:
        return 0.0
    return min(max(num / den, lo), hi)


def fired(firings: Iterable[tuple[float, float]]) -> tuple[float, bool]:
    """Like :func:`center_average` but also reports whether anything fired."""
    firings = list(firings)
    den = sum(d for d, _ in firings)
    if den < EPS_DEN:
        return 0.0, False
    return center_average(firings), True
