"""Log-price recursion driven by trader groups.

Time runs over integer steps.  ``p_0 = p0`` is given; rows ``t = 1..T0``
come from a Gaussian random walk and rows ``t = T0+1..T`` from

    ln p_{t+1} = ln p_t + [sigma * eps_t] + sum_i a_i(t) * ed_i(x_t)

so row ``t`` of a record carries the demand formed at ``t - 1`` that moved
the price to ``p_t``.  Noise comes from ``numpy.random.default_rng(seed)``
(PCG64) via ``standard_normal``: one draw per row, ``eps`` for row ``t`` is
draw ``t - 1``, and draws are consumed whether or not noise is applied, so
runs that differ only in their groups share the same bootstrap path.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import rulegroups
from .dsl import CompiledBlock, RuleBlock, compile_rule_block
from .errors import ConfigError, NumericalFailure
from .fuzzy import TermFamily
from .indicators import BAND_MODES, FeatureParams, IndicatorCache
from .rulegroups import INACTIVE, ExcessDemand, Portfolio

BUILTIN_KINDS = tuple(f"ed{i}" for i in range(1, 13))


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant strength a(t): ``value[k]`` holds from ``start[k]`` on."""

    steps: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.steps:
            raise ConfigError("strength schedule is empty")
        starts = [s for s, _ in self.steps]
        if starts[0] != 0:
            raise ConfigError(f"strength schedule must start at t=0, starts at {starts[0]}")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigError(f"strength schedule start times must increase: {starts}")
        for _, v in self.steps:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigError(f"strength must be finite and >= 0, got {v!r}")

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls(((0, float(value)),))

    @classmethod
    def coerce(cls, spec) -> "Schedule":
        if isinstance(spec, Schedule):
            return spec
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return cls.constant(spec)
        try:
            return cls(tuple((int(s), float(v)) for s, v in spec))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad strength schedule {spec!r}: {exc}") from None

    def at(self, t: int) -> float:
        starts = [s for s, _ in self.steps]
        return self.steps[bisect.bisect_right(starts, t) - 1][1]

    def to_json(self):
        if len(self.steps) == 1:
            return self.steps[0][1]
        return [[s, v] for s, v in self.steps]


@dataclass(frozen=True)
class ManipulatorSchedule:
    """Three contiguous half-open phases ``[a, b)``, ``[b, c)``, ``[c, d)``."""

    phase1: tuple[int, int]
    phase2: tuple[int, int]
    phase3: tuple[int, int]

    def __post_init__(self):
        (a, b), (b2, c), (c2, d) = self.phase1, self.phase2, self.phase3
        if not (b == b2 and c == c2 and a < b < c < d):
            raise ConfigError(
                f"manipulator phases must be contiguous and non-empty, got {self.phase1}, {self.phase2}, {self.phase3}"
            )

    def phase(self, t: int) -> Optional[int]:
        for k, (lo, hi) in enumerate((self.phase1, self.phase2, self.phase3), start=1):
            if lo <= t < hi:
                return k
        return None


@dataclass
class TraderGroup:
    kind: str
    strength: Schedule
    params: FeatureParams = field(default_factory=FeatureParams)
    w: float = 0.01
    block: Optional[RuleBlock] = None
    id: Optional[str] = None
    dsl_path: Optional[str] = None

    def __post_init__(self):
        self.strength = Schedule.coerce(self.strength)
        if self.kind not in BUILTIN_KINDS and self.kind != "dsl":
            raise ConfigError(f"unknown group kind {self.kind!r}")
        if self.kind == "dsl" and self.block is None:
            raise ConfigError("a dsl group needs a rule block")
        if not (math.isfinite(self.w) and self.w > 0):
            raise ConfigError(f"w must be positive, got {self.w!r}")
        p = self.params
        if min(p.m, p.n, p.n_star) < 1:
            raise ConfigError(f"window lengths must be >= 1, got {p}")
        if self.id is None:
            self.id = self.block.name if self.kind == "dsl" else self.kind[2:]

    @property
    def features(self) -> tuple[str, ...]:
        if self.kind == "dsl":
            return self.block.features
        return rulegroups.FEATURES_USED[self.kind]

    def lookback(self) -> int:
        if self.kind == "ed10":
            return self.params.n - 1
        if "x1" in self.features and self.params.m >= self.params.n:
            raise ConfigError(f"group {self.id}: need m < n, got m={self.params.m}, n={self.params.n}")
        return max((self.params.lookback(f) for f in self.features), default=0)


@dataclass
class Scenario:
    sigma: float
    bootstrap_len: int
    horizon: int
    groups: list[TraderGroup] = field(default_factory=list)
    p0: float = 10.0
    seed: int = 0
    keep_noise: bool = False
    band_mode: str = "literal"
    volume: Optional[Sequence[float]] = None
    index: Optional[Sequence[float]] = None
    manipulator: Optional[ManipulatorSchedule] = None
    portfolio: Optional[Portfolio] = None
    comment: Optional[str] = None
    volume_source: Optional[dict] = None
    index_source: Optional[dict] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not (math.isfinite(self.p0) and self.p0 > 0):
            raise ConfigError(f"p0 must be positive, got {self.p0!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if self.bootstrap_len < 1:
            raise ConfigError(f"bootstrap_len must be >= 1, got {self.bootstrap_len}")
        if not self.horizon > self.bootstrap_len:
            raise ConfigError(f"horizon ({self.horizon}) must exceed bootstrap_len ({self.bootstrap_len})")
        if self.band_mode not in BAND_MODES:
            raise ConfigError(f"band_mode must be one of {BAND_MODES}, got {self.band_mode!r}")
        ids = set()
        for g in self.groups:
            base, k = g.id, 2
            while g.id in ids:
                g.id = f"{base}_{k}"
                k += 1
            ids.add(g.id)
            need = g.lookback()
            if need > self.bootstrap_len:
                raise ConfigError(
                    f"group {g.id} needs {need} steps of history but bootstrap_len is {self.bootstrap_len}"
                )
            used = set(g.features)
            if used & {"x8", "x9"} and self.volume is None:
                raise ConfigError(f"group {g.id} reads OBV features but the scenario has no volume series")
            if "x10" in used and self.index is None:
                raise ConfigError(f"group {g.id} reads relative strength but the scenario has no index series")
            if g.kind == "ed8" and self.manipulator is None:
                raise ConfigError(f"group {g.id} is a manipulator but no phase schedule was given")
        for name in ("volume", "index"):
            series = getattr(self, name)
            if series is not None and len(series) < self.horizon:
                raise ConfigError(f"{name} series has {len(series)} rows, horizon needs {self.horizon}")

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed, groups=[replace(g) for g in self.groups])


@dataclass
class GroupColumn:
    id: str
    kind: str
    ed: list[float] = field(default_factory=list)
    strength: list[float] = field(default_factory=list)
    active: list[bool] = field(default_factory=list)


@dataclass
class SimulationRecord:
    """Row-per-step output; row ``t`` holds ``p_t`` and what produced it."""

    scenario: Optional[Scenario]
    initial_price: float
    t: list[int] = field(default_factory=list)
    price: list[float] = field(default_factory=list)
    log_return: list[float] = field(default_factory=list)
    regime: list[str] = field(default_factory=list)
    noise: list[float] = field(default_factory=list)
    groups: list[GroupColumn] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        for k in range(len(self.t)):
            row = {
                "t": self.t[k],
                "price": self.price[k],
                "log_return": self.log_return[k],
                "regime": self.regime[k],
                "noise": self.noise[k],
            }
            for g in self.groups:
                row[f"ed_{g.id}"] = g.ed[k]
                row[f"a_{g.id}"] = g.strength[k]
                row[f"active_{g.id}"] = g.active[k]
            yield row

    def returns(self, regime: Optional[str] = None) -> np.ndarray:
        r = np.asarray(self.log_return, dtype=float)
        if regime is None or regime == "all":
            return r
        return r[np.asarray(self.regime) == regime]

    def group(self, id: str) -> GroupColumn:
        for g in self.groups:
            if g.id == id:
                return g
        raise KeyError(id)

    @property
    def bootstrap_len(self) -> int:
        return sum(1 for r in self.regime if r == "bootstrap")


def _walk(log_p0: float, increments) -> list[float]:
    out = [log_p0]
    for inc in increments:
        out.append(out[-1] + inc)
    return out


def bootstrap_random_walk(p0: float, sigma: float, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Prices p_1..p_steps of a Gaussian log-random walk started at p0."""
    if not (math.isfinite(p0) and p0 > 0):
        raise ConfigError(f"p0 must be positive, got {p0!r}")
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ConfigError(f"sigma must be finite and >= 0, got {sigma!r}")
    if steps < 1:
        raise ConfigError(f"random walk needs at least one step, got {steps}")
    eps = rng.standard_normal(steps)
    return np.exp(np.array(_walk(math.log(p0), (sigma * e for e in eps))[1:]))


def update_portfolio(portfolio: Portfolio, ed: float, strength: float, price: float, lot: float = 1.0) -> Portfolio:
    """Apply one executed order ``strength * ed``.

    Buys add ``order * lot`` shares and move the anchor to the volume-weighted
    purchase price.  Sells remove the fraction ``|order|`` of the position,
    clamped at zero.
    """
    order = strength * ed
    held = portfolio.amount
    if order > 0:
        qty = order * lot
        anchor = price if held == 0 else (held * portfolio.anchor_price + qty * price) / (held + qty)
        return Portfolio(held + qty, anchor)
    if order < 0:
        left = max(0.0, held * (1.0 + order))
        return Portfolio(left, portfolio.anchor_price if left > 0 else None)
    return portfolio


class MarketState:
    """Mutable per-run state: price history, indicator cache, portfolio."""

    def __init__(
        self,
        prices: Sequence[float],
        volume=None,
        index=None,
        band_mode: str = "literal",
        manipulator: Optional[ManipulatorSchedule] = None,
        portfolio: Optional[Portfolio] = None,
        log_prices: Optional[Sequence[float]] = None,
    ):
        self.prices = [float(p) for p in prices]
        self.log_prices = list(log_prices) if log_prices is not None else [math.log(p) for p in self.prices]
        self.cache = IndicatorCache(self.prices, volume, index, band_mode)
        self.manipulator = manipulator
        self.portfolio = portfolio
        self._compiled: dict[int, CompiledBlock] = {}

    @property
    def t(self) -> int:
        return len(self.prices) - 1

    def demand(self, group: TraderGroup, t: Optional[int] = None) -> ExcessDemand:
        t = self.t if t is None else t
        family = TermFamily(group.w)
        if group.kind == "ed10":
            if self.portfolio is None:
                return INACTIVE
            recent = None
            if t - group.params.n + 1 >= 0:
                recent = self.cache.rolling_max(t, group.params.n)
            return rulegroups.ed10(self.portfolio, self.prices[t], recent, family)
        fv = self.cache.features(t, group.params, group.features)
        if group.kind == "dsl":
            key = id(group)
            if key not in self._compiled:
                self._compiled[key] = compile_rule_block(group.block, family)
            return self._compiled[key](fv)
        phase = self.manipulator.phase(t) if self.manipulator is not None else None
        return rulegroups.evaluate(group.kind, fv, family, phase)

    def step(self, groups: Sequence[TraderGroup], noise: float = 0.0):
        """Advance one step; returns ``(p_next, [(ed, a), ...], increment)``."""
        t = self.t
        outcomes = []
        drift = 0.0
        for g in groups:
            ed = self.demand(g, t)
            a = g.strength.at(t)
            outcomes.append((ed, a))
            drift += a * ed.value
        increment = noise + drift
        log_next = self.log_prices[-1] + increment
        p_next = math.exp(log_next) if math.isfinite(log_next) else math.nan
        if not (math.isfinite(p_next) and p_next > 0):
            raise NumericalFailure(
                f"price left the representable range at t={t + 1} (log price {log_next!r})",
                row={"t": t + 1, "log_price": log_next, "noise": noise, "drift": drift},
            )
        if self.portfolio is not None:
            for g, (ed, a) in zip(groups, outcomes):
                if g.kind == "ed10" and ed.active:
                    self.portfolio = update_portfolio(self.portfolio, ed.value, a, p_next)
        self.log_prices.append(log_next)
        self.prices.append(p_next)
        return p_next, outcomes, increment


def step(state: MarketState, groups: Sequence[TraderGroup], noise: float = 0.0) -> float:
    """One application of the price recursion; returns ``p_{t+1}``."""
    return state.step(groups, noise)[0]


def simulate(scenario: Scenario) -> SimulationRecord:
    scenario.validate()
    rng = np.random.default_rng(scenario.seed)
    T0, T = scenario.bootstrap_len, scenario.horizon
    eps = rng.standard_normal(T)
    sigma = scenario.sigma

    record = SimulationRecord(scenario, scenario.p0)
    record.groups = [GroupColumn(g.id, g.kind) for g in scenario.groups]
    state = MarketState(
        [scenario.p0],
        volume=scenario.volume,
        index=scenario.index,
        band_mode=scenario.band_mode,
        manipulator=scenario.manipulator,
        portfolio=scenario.portfolio,
    )

    def append(t, regime, noise, outcomes):
        record.t.append(t)
        record.price.append(state.prices[t])
        record.log_return.append(state.log_prices[t] - state.log_prices[t - 1])
        record.regime.append(regime)
        record.noise.append(noise)
        for col, (ed, a) in zip(record.groups, outcomes):
            col.ed.append(ed.value)
            col.strength.append(a)
            col.active.append(ed.active)

    for t in range(1, T + 1):
        noise = sigma * eps[t - 1]
        if t <= T0:
            regime = "bootstrap"
            state.log_prices.append(state.log_prices[-1] + noise)
            state.prices.append(math.exp(state.log_prices[-1]))
            outcomes = [(INACTIVE, g.strength.at(t - 1)) for g in scenario.groups]
        else:
            regime = "model"
            if not scenario.keep_noise:
                noise = 0.0
            try:
                _, outcomes, _ = state.step(scenario.groups, noise)
            except NumericalFailure as exc:
                exc.record = record
                raise
        append(t, regime, float(noise), outcomes)
    return record


def replay_prices(record: SimulationRecord) -> list[float]:
    """Rebuild prices from the recorded noise and group terms alone."""
    log_p = math.log(record.initial_price)
    out = []
    for k in range(len(record)):
        drift = 0.0
        for g in record.groups:
            drift += g.strength[k] * g.ed[k]
        log_p = log_p + (record.noise[k] + drift)
        out.append(math.exp(log_p))
    return out

