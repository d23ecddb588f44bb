"""Hand-coded excess-demand functions ed1..ed12.

Each function takes the features it needs (``None`` when the indicator is
absent) and returns an :class:`ExcessDemand`.  A group is *inactive* when its
features are missing, its domain condition fails, or none of its rules fire;
an inactive group always reports a value of 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import InvalidParameter
from .fuzzy import CENTERS, TermFamily, fired

MAX_DEMAND = 0.4
# Widths of the NL sets in the protective and trailing stop rules.
PROTECTIVE_WIDTH = 0.20
TRAILING_WIDTH = 0.10


class ExcessDemand(NamedTuple):
    value: float
    active: bool


INACTIVE = ExcessDemand(0.0, False)


def _result(firings) -> ExcessDemand:
    value, active = fired(firings)
    return ExcessDemand(value, active) if active else INACTIVE


def _mu(family: TermFamily, term: str, x: Optional[float]) -> float:
    return 0.0 if x is None else family.membership(term, x)


def ed1(x1: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Moving-average rules: follow small/medium moves, fade large ones."""
    if x1 is None:
        return INACTIVE
    c = centers
    return _result(
        [
            (family.membership("PS", x1), c["BS"]),
            (family.membership("PM", x1), c["BB"]),
            (family.membership("PL", x1), c["SM"]),
            (family.membership("NS", x1), c["SS"]),
            (family.membership("NM", x1), c["SB"]),
            (family.membership("NL", x1), c["BM"]),
            (family.membership("AZ", x1), c["N"]),
        ]
    )


def ed2(x2: Optional[float], x3: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Support/resistance breakout."""
    if not ((x2 is not None and x2 > 0) or (x3 is not None and x3 < 0)):
        return INACTIVE
    c = centers
    return _result(
        [
            (_mu(family, "PS", x2), c["BS"]),
            (_mu(family, "PM", x2), c["BB"]),
            (_mu(family, "PL", x2), c["SM"]),
            (_mu(family, "NS", x3), c["SS"]),
            (_mu(family, "NM", x3), c["SB"]),
            (_mu(family, "NL", x3), c["BM"]),
        ]
    )


def ed3(x2: Optional[float], x3: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Second chance at the support (buy) or resistance (sell)."""
    w = family.w
    near2 = x2 is not None and abs(x2) < w
    near3 = x3 is not None and abs(x3) < w
    if not (near2 or near3):
        return INACTIVE
    return _result([(_mu(family, "AZ", x3), centers["BM"]), (_mu(family, "AZ", x2), centers["SM"])])


def ed4(x4: Optional[float], x5: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Bet on trend continuation when price approaches a trend line."""
    w = family.w
    if not ((x4 is not None and 0 < x4 < 2 * w) or (x5 is not None and -2 * w < x5 < 0)):
        return INACTIVE
    return _result([(_mu(family, "PS", x4), centers["BM"]), (_mu(family, "NS", x5), centers["SM"])])


def ed5(x4: Optional[float], x5: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Trend reversal after a medium-to-large break of a trend line."""
    w = family.w
    if not ((x4 is not None and x4 < -w) or (x5 is not None and x5 > w)):
        return INACTIVE
    c = centers
    return _result(
        [
            (_mu(family, "PM", x5), c["BS"]),
            (_mu(family, "PL", x5), c["BB"]),
            (_mu(family, "NM", x4), c["SS"]),
            (_mu(family, "NL", x4), c["SB"]),
        ]
    )


def ed6(x1: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Big seller: sells into rising prices, neutral otherwise.  Use x1 with m=1."""
    if x1 is None:
        return INACTIVE
    c = centers
    return _result(
        [
            (family.membership("PS", x1), c["SS"]),
            (family.membership("PM", x1), c["SM"]),
            (family.membership("PL", x1), c["SB"]),
            (family.membership("AZ", x1), c["N"]),
        ]
    )


def ed7(x1: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Big buyer: mirror image of :func:`ed6`."""
    if x1 is None:
        return INACTIVE
    c = centers
    return _result(
        [
            (family.membership("NS", x1), c["BS"]),
            (family.membership("NM", x1), c["BM"]),
            (family.membership("NL", x1), c["BB"]),
            (family.membership("AZ", x1), c["N"]),
        ]
    )


def ed8(x1: Optional[float], phase: Optional[int], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Pump-and-dump manipulator.

    Phase 1 accumulates like a big buyer, phase 2 buys big whatever the
    market does, phase 3 distributes like a big seller.  ``phase=None`` (time
    outside the schedule) is inactive, and so is a missing x1 in any phase.
    """
    if phase == 1:
        return ed7(x1, family, centers)
    if phase == 2 and x1 is not None:
        return ExcessDemand(centers["BB"], True)
    if phase == 3:
        return ed6(x1, family, centers)
    return INACTIVE


def ed9(x6: Optional[float], x7: Optional[float], family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Band breakout."""
    c = centers
    return _result(
        [
            (_mu(family, "PS", x6), c["BS"]),
            (_mu(family, "PM", x6), c["BB"]),
            (_mu(family, "NS", x7), c["SS"]),
            (_mu(family, "NM", x7), c["SB"]),
        ]
    )


@dataclass(frozen=True)
class Portfolio:
    """Long position of ``amount`` shares bought around ``anchor_price``."""

    amount: float = 0.0
    anchor_price: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.amount) and self.amount >= 0):
            raise InvalidParameter(f"portfolio amount must be finite and >= 0, got {self.amount!r}")
        if self.amount > 0 and not (self.anchor_price and self.anchor_price > 0):
            raise InvalidParameter("an open position needs a positive anchor price")


def ed10(
    portfolio: Portfolio,
    price: float,
    recent_max: Optional[float],
    family: TermFamily,
    centers=CENTERS,
) -> ExcessDemand:
    """Protective and trailing stops on the held position.

    Protective: loss ``ln(p/p*)`` is Negative Large at width 20%.
    Trailing: in profit (Positive at the family width) and drawdown
    ``ln(p/p_max)`` is Negative Large at width 10%.  Both rules sell big,
    so any firing yields the SB center.
    """
    if portfolio.amount <= 0:
        return INACTIVE
    loss = math.log(price / portfolio.anchor_price)
    protect = TermFamily(PROTECTIVE_WIDTH).membership("NL", loss)
    trail = 0.0
    if recent_max is not None:
        gain = family.aggregate("Positive", loss)
        trail = gain * TermFamily(TRAILING_WIDTH).membership("NL", math.log(price / recent_max))
    return _result([(protect, centers["SB"]), (trail, centers["SB"])])


def ed11(x4, x5, x8, x9, family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Trend-line break confirmed by the on-balance-volume trend."""
    buy = _mu(family, "PS", x5) * _mu(family, "P", x8)
    sell = _mu(family, "NS", x4) * _mu(family, "N", x9)
    return _result([(buy, centers["BM"]), (sell, centers["SM"])])


def ed12(x4, x5, x10, family: TermFamily, centers=CENTERS) -> ExcessDemand:
    """Trend-line break confirmed by relative strength against an index."""
    buy = _mu(family, "PS", x5) * _mu(family, "P", x10)
    sell = _mu(family, "NS", x4) * _mu(family, "N", x10)
    return _result([(buy, centers["BM"]), (sell, centers["SM"])])


# Features read by each stateless group, in call order.
FEATURES_USED = {
    "ed1": ("x1",),
    "ed2": ("x2", "x3"),
    "ed3": ("x2", "x3"),
    "ed4": ("x4", "x5"),
    "ed5": ("x4", "x5"),
    "ed6": ("x1",),
    "ed7": ("x1",),
    "ed8": ("x1",),
    "ed9": ("x6", "x7"),
    "ed10": (),
    "ed11": ("x4", "x5", "x8", "x9"),
    "ed12": ("x4", "x5", "x10"),
}

_STATELESS = {
    "ed1": ed1,
    "ed2": ed2,
    "ed3": ed3,
    "ed4": ed4,
    "ed5": ed5,
    "ed6": ed6,
    "ed7": ed7,
    "ed9": ed9,
    "ed11": ed11,
    "ed12": ed12,
}


def evaluate(kind: str, features, family: TermFamily, phase: Optional[int] = None) -> ExcessDemand:
    """Evaluate a stateless built-in group (or ed8 with its phase) on a FeatureVector."""
    args = [features.get(name) for name in FEATURES_USED[kind]]
    if kind == "ed8":
        return ed8(args[0], phase, family)
    return _STATELESS[kind](*args, family)
