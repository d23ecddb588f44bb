"""Technical indicators and the feature vector x1..x10.

Functions take a plain price sequence and a time index ``t`` and only look at
``prices[:t + 1]`` (plus ``prices[t]`` itself).  History shortfalls raise
:class:`IndicatorUnavailable`; the ``*_ratios`` helpers instead return
``None`` for each feature that cannot be formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

from .errors import IndicatorUnavailable, InvalidParameter

Extremum = tuple[int, float]

FEATURES = tuple(f"x{i}" for i in range(1, 11))
BAND_MODES = ("literal", "relative")


def _check_t(values: Sequence[float], t: int) -> None:
    if t < 0 or t >= len(values):
        raise IndicatorUnavailable(f"t={t} outside history of length {len(values)}")


def moving_average(prices: Sequence[float], t: int, n: int) -> float:
    if n < 1:
        raise InvalidParameter(f"window length must be >= 1, got {n}")
    _check_t(prices, t)
    if t - n + 1 < 0:
        raise IndicatorUnavailable(f"moving average of length {n} needs t >= {n - 1}, got t={t}")
    return math.fsum(prices[t - n + 1 : t + 1]) / n


def ma_log_ratio(prices: Sequence[float], t: int, m: int, n: int) -> float:
    """x1: log of the short (m) over the long (n) moving average."""
    if not m < n:
        raise InvalidParameter(f"need m < n, got m={m}, n={n}")
    return math.log(moving_average(prices, t, m) / moving_average(prices, t, n))


def find_extrema(values: Sequence[float], lo: int, hi: int) -> tuple[list[Extremum], list[Extremum]]:
    """Strict local maxima and minima whose index lies in ``[lo, hi]``.

    A point needs both neighbours to qualify, so the first and last samples
    of ``values`` are never extrema; ties (plateaus) are neither.
    """
    peaks: list[Extremum] = []
    troughs: list[Extremum] = []
    for k in range(max(lo, 1), min(hi, len(values) - 2) + 1):
        prev, cur, nxt = values[k - 1], values[k], values[k + 1]
        if cur > prev and cur > nxt:
            peaks.append((k, cur))
        elif cur < prev and cur < nxt:
            troughs.append((k, cur))
    return peaks, troughs


def _window_extrema(values: Sequence[float], t: int, n: int):
    _check_t(values, t)
    if n < 1 or t - n < 0:
        raise IndicatorUnavailable(f"window [t-{n}, t-1] not inside history at t={t}")
    return find_extrema(values[: t + 1], t - n, t - 1)


def resistance(prices: Sequence[float], t: int, n: int) -> float:
    """Highest peak in ``[t - n, t - 1]``."""
    peaks, _ = _window_extrema(prices, t, n)
    if not peaks:
        raise IndicatorUnavailable(f"no peak in [t-{n}, t-1] at t={t}")
    return max(v for _, v in peaks)


def support(prices: Sequence[float], t: int, n: int) -> float:
    """Lowest trough in ``[t - n, t - 1]``."""
    _, troughs = _window_extrema(prices, t, n)
    if not troughs:
        raise IndicatorUnavailable(f"no trough in [t-{n}, t-1] at t={t}")
    return min(v for _, v in troughs)


def breakout_ratios(prices: Sequence[float], t: int, n: int) -> tuple[Optional[float], Optional[float]]:
    """(x2, x3) = log of the price over resistance and over support."""
    p = prices[t] if 0 <= t < len(prices) else None
    x2 = x3 = None
    try:
        x2 = math.log(p / resistance(prices, t, n))
    except IndicatorUnavailable:
        pass
    try:
        x3 = math.log(p / support(prices, t, n))
    except IndicatorUnavailable:
        pass
    return x2, x3


def lowest_two(troughs: Sequence[Extremum]) -> tuple[Extremum, Extremum]:
    if len(troughs) < 2:
        raise IndicatorUnavailable("fewer than two troughs")
    # Ties in value go to the earlier index.
    a, b = sorted(troughs, key=lambda e: (e[1], e[0]))[:2]
    return (a, b) if a[0] < b[0] else (b, a)


def highest_two(peaks: Sequence[Extremum]) -> tuple[Extremum, Extremum]:
    if len(peaks) < 2:
        raise IndicatorUnavailable("fewer than two peaks")
    a, b = sorted(peaks, key=lambda e: (-e[1], e[0]))[:2]
    return (a, b) if a[0] < b[0] else (b, a)


def two_lowest_troughs(values: Sequence[float], t: int, n: int) -> tuple[Extremum, Extremum]:
    return lowest_two(_window_extrema(values, t, n)[1])


def two_highest_peaks(values: Sequence[float], t: int, n: int) -> tuple[Extremum, Extremum]:
    return highest_two(_window_extrema(values, t, n)[0])


@dataclass(frozen=True)
class TrendLine:
    slope: float
    intercept: float
    anchors: tuple[Extremum, Extremum]
    direction: str

    def value_at(self, t: float) -> float:
        # Evaluate from the nearer anchor so both anchors are reproduced exactly.
        (t1, v1), (t2, v2) = self.anchors
        if abs(t - t2) < abs(t - t1):
            return v2 + self.slope * (t - t2)
        return v1 + self.slope * (t - t1)


def trend_line(anchors: tuple[Extremum, Extremum], direction: str) -> Optional[TrendLine]:
    """Line through two anchors, or ``None`` if it does not point ``direction``."""
    (t1, v1), (t2, v2) = anchors
    if not t1 < t2:
        raise InvalidParameter(f"anchors must satisfy t1 < t2, got {t1}, {t2}")
    if direction == "up":
        if not v1 < v2:
            return None
    elif direction == "down":
        if not v1 > v2:
            return None
    else:
        raise InvalidParameter(f"direction must be 'up' or 'down', got {direction!r}")
    slope = (v2 - v1) / (t2 - t1)
    intercept = (v1 * t2 - v2 * t1) / (t2 - t1)
    return TrendLine(slope, intercept, ((t1, v1), (t2, v2)), direction)


def value_at(line: TrendLine, t: float) -> float:
    return line.value_at(t)


def _line_ratio(p: float, line: Optional[TrendLine], t: int) -> Optional[float]:
    if line is None:
        return None
    level = line.value_at(t)
    if level <= 0:
        return None
    return math.log(p / level)


def _lines_from(peaks, troughs):
    up = down = None
    if len(troughs) >= 2:
        up = trend_line(lowest_two(troughs), "up")
    if len(peaks) >= 2:
        down = trend_line(highest_two(peaks), "down")
    return up, down


def trend_lines(prices: Sequence[float], t: int, n: int) -> tuple[Optional[TrendLine], Optional[TrendLine]]:
    """(uptrend line, downtrend line) built from the window ``[t - n, t - 1]``."""
    try:
        peaks, troughs = _window_extrema(prices, t, n)
    except IndicatorUnavailable:
        return None, None
    return _lines_from(peaks, troughs)


def trendline_ratios(prices: Sequence[float], t: int, n: int) -> tuple[Optional[float], Optional[float]]:
    """(x4, x5) = log of the price over the up- and downtrend line at t."""
    up, down = trend_lines(prices, t, n)
    p = prices[t]
    return _line_ratio(p, up, t), _line_ratio(p, down, t)


def log_returns(prices: Sequence[float], lo: int, hi: int) -> list[float]:
    return [math.log(prices[k]) - math.log(prices[k - 1]) for k in range(lo, hi + 1)]


def moving_std(prices: Sequence[float], t: int, n: int) -> float:
    """Root mean square of the last n log-returns (zero-mean assumption)."""
    if n < 1:
        raise InvalidParameter(f"window length must be >= 1, got {n}")
    _check_t(prices, t)
    if t - n < 0:
        raise IndicatorUnavailable(f"{n} returns need t >= {n}, got t={t}")
    r = log_returns(prices, t - n + 1, t)
    return math.sqrt(math.fsum(x * x for x in r) / n)


def band_edges(mean: float, v: float, mode: str = "literal") -> tuple[float, float]:
    if mode == "literal":
        return mean + 2.0 * v, mean - 2.0 * v
    if mode == "relative":
        return mean * math.exp(2.0 * v), mean * math.exp(-2.0 * v)
    raise InvalidParameter(f"band_mode must be one of {BAND_MODES}, got {mode!r}")


def band_ratios(prices: Sequence[float], t: int, n: int, mode: str = "literal") -> tuple[Optional[float], Optional[float]]:
    """(x6, x7) = log of the price over the upper and lower band edge.

    In ``literal`` mode the edges are ``mean +/- 2 v`` with ``v`` the return
    volatility, exactly as the rule is usually stated, even though it adds a
    return-scale number to a price.  ``relative`` uses ``mean * exp(+/-2 v)``.
    """
    try:
        mean = moving_average(prices, t, n)
        v = moving_std(prices, t, n)
    except IndicatorUnavailable:
        return None, None
    return _band_from(prices[t], mean, v, mode)


def _band_from(p, mean, v, mode):
    upper, lower = band_edges(mean, v, mode)
    x6 = math.log(p / upper) if upper > 0 else None
    x7 = math.log(p / lower) if lower > 0 else None
    return x6, x7


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def obv_series(prices: Sequence[float], volumes: Sequence[float], t: int) -> list[float]:
    """OBV_0..OBV_t with OBV_0 = 0."""
    _check_t(prices, t)
    if len(volumes) <= t:
        raise IndicatorUnavailable(f"no volume at t={t}")
    out = [0.0]
    for k in range(1, t + 1):
        out.append(out[-1] + volumes[k] * _sign(prices[k] - prices[k - 1]))
    return out


def obv(prices: Sequence[float], volumes: Sequence[float], t: int) -> float:
    return obv_series(prices, volumes, t)[t]


def _slope(pair: tuple[Extremum, Extremum]) -> float:
    (t1, v1), (t2, v2) = pair
    return (v2 - v1) / (t2 - t1)


def obv_trend_slopes(obv_values: Sequence[float], t: int, n: int) -> tuple[Optional[float], Optional[float]]:
    """(x8, x9): slopes through the two lowest OBV troughs / two highest peaks."""
    try:
        peaks, troughs = _window_extrema(obv_values, t, n)
    except IndicatorUnavailable:
        return None, None
    x8 = _slope(lowest_two(troughs)) if len(troughs) >= 2 else None
    x9 = _slope(highest_two(peaks)) if len(peaks) >= 2 else None
    return x8, x9


def rs_log_ratio(prices: Sequence[float], index: Optional[Sequence[float]], t: int, n: int) -> Optional[float]:
    """x10: log of relative strength over its n-step mean; None without data."""
    if index is None or len(index) <= t or t - n + 1 < 0 or t >= len(prices):
        return None
    rs = [prices[k] / index[k] for k in range(t - n + 1, t + 1)]
    return math.log(rs[-1] / (math.fsum(rs) / n))


def rolling_max(prices: Sequence[float], t: int, n: int) -> float:
    """Maximum of the last n prices, p_t included."""
    if n < 1:
        raise InvalidParameter(f"window length must be >= 1, got {n}")
    _check_t(prices, t)
    if t - n + 1 < 0:
        raise IndicatorUnavailable(f"rolling max of length {n} needs t >= {n - 1}, got t={t}")
    return max(prices[t - n + 1 : t + 1])


@dataclass
class FeatureVector:
    x1: Optional[float] = None
    x2: Optional[float] = None
    x3: Optional[float] = None
    x4: Optional[float] = None
    x5: Optional[float] = None
    x6: Optional[float] = None
    x7: Optional[float] = None
    x8: Optional[float] = None
    x9: Optional[float] = None
    x10: Optional[float] = None

    def get(self, name: str) -> Optional[float]:
        return getattr(self, name)

    def present(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


@dataclass(frozen=True)
class FeatureParams:
    """Window lengths: x1 uses (m, n); x2-x5 use n_star; x6-x10 use n."""

    m: int = 1
    n: int = 5
    n_star: int = 100

    def lookback(self, feature: str) -> int:
        """Smallest t at which ``feature`` can exist."""
        if feature == "x1":
            return self.n - 1
        if feature in ("x2", "x3", "x4", "x5"):
            return self.n_star
        if feature in ("x6", "x7", "x8", "x9"):
            return self.n
        if feature == "x10":
            return self.n - 1
        raise InvalidParameter(f"unknown feature {feature!r}")


class IndicatorCache:
    """Per-run indicator state over an append-only history.

    Extremum flags and OBV are maintained incrementally as prices arrive;
    windowed statistics are memoised per ``(t, window)``.  Values always equal
    the from-scratch functions above.
    """

    def __init__(self, prices: list[float], volumes=None, index=None, band_mode: str = "literal"):
        if band_mode not in BAND_MODES:
            raise InvalidParameter(f"band_mode must be one of {BAND_MODES}, got {band_mode!r}")
        self.prices = prices
        self.volumes = volumes
        self.index = index
        self.band_mode = band_mode
        self._memo: dict = {}
        self._logs: list[float] = []
        self._price_peak: list[bool] = []
        self._price_trough: list[bool] = []
        self._obv: list[float] = []
        self._obv_peak: list[bool] = []
        self._obv_trough: list[bool] = []

    def _sync(self) -> None:
        p = self.prices
        while len(self._logs) < len(p):
            self._logs.append(math.log(p[len(self._logs)]))
        _extend_flags(p, self._price_peak, self._price_trough)
        if self.volumes is not None:
            top = min(len(p), len(self.volumes))
            while len(self._obv) < top:
                k = len(self._obv)
                prev = self._obv[-1] if k else 0.0
                self._obv.append(0.0 if k == 0 else prev + self.volumes[k] * _sign(p[k] - p[k - 1]))
            _extend_flags(self._obv, self._obv_peak, self._obv_trough)

    def _memoised(self, key, fn):
        try:
            return self._memo[key]
        except KeyError:
            val = self._memo[key] = fn()
            return val

    def moving_average(self, t: int, n: int) -> float:
        return self._memoised(("ma", t, n), lambda: moving_average(self.prices, t, n))

    def ma_log_ratio(self, t: int, m: int, n: int) -> float:
        if not m < n:
            raise InvalidParameter(f"need m < n, got m={m}, n={n}")
        return math.log(self.moving_average(t, m) / self.moving_average(t, n))

    def _extrema(self, values, peak_flags, trough_flags, t, n):
        self._sync()
        _check_t(values, t)
        if n < 1 or t - n < 0:
            raise IndicatorUnavailable(f"window [t-{n}, t-1] not inside history at t={t}")
        peaks, troughs = [], []
        # Flags exist only for indices whose right neighbour is known.
        for k in range(max(t - n, 1), min(t - 1, len(peak_flags) - 1) + 1):
            if peak_flags[k]:
                peaks.append((k, values[k]))
            elif trough_flags[k]:
                troughs.append((k, values[k]))
        return peaks, troughs

    def price_extrema(self, t: int, n: int):
        return self._memoised(
            ("px", t, n), lambda: self._extrema(self.prices, self._price_peak, self._price_trough, t, n)
        )

    def resistance(self, t: int, n: int) -> float:
        peaks, _ = self.price_extrema(t, n)
        if not peaks:
            raise IndicatorUnavailable(f"no peak in [t-{n}, t-1] at t={t}")
        return max(v for _, v in peaks)

    def support(self, t: int, n: int) -> float:
        _, troughs = self.price_extrema(t, n)
        if not troughs:
            raise IndicatorUnavailable(f"no trough in [t-{n}, t-1] at t={t}")
        return min(v for _, v in troughs)

    def breakout_ratios(self, t: int, n: int):
        p = self.prices[t]
        out = []
        for fn in (self.resistance, self.support):
            try:
                out.append(math.log(p / fn(t, n)))
            except IndicatorUnavailable:
                out.append(None)
        return tuple(out)

    def trend_lines(self, t: int, n: int):
        def build():
            try:
                peaks, troughs = self.price_extrema(t, n)
            except IndicatorUnavailable:
                return None, None
            return _lines_from(peaks, troughs)

        return self._memoised(("lines", t, n), build)

    def trendline_ratios(self, t: int, n: int):
        up, down = self.trend_lines(t, n)
        p = self.prices[t]
        return _line_ratio(p, up, t), _line_ratio(p, down, t)

    def moving_std(self, t: int, n: int) -> float:
        def build():
            self._sync()
            _check_t(self.prices, t)
            if t - n < 0:
                raise IndicatorUnavailable(f"{n} returns need t >= {n}, got t={t}")
            lg = self._logs
            return math.sqrt(math.fsum((lg[k] - lg[k - 1]) ** 2 for k in range(t - n + 1, t + 1)) / n)

        return self._memoised(("std", t, n), build)

    def band_ratios(self, t: int, n: int):
        try:
            mean = self.moving_average(t, n)
            v = self.moving_std(t, n)
        except IndicatorUnavailable:
            return None, None
        return _band_from(self.prices[t], mean, v, self.band_mode)

    def obv(self, t: int) -> float:
        self._sync()
        if t >= len(self._obv):
            raise IndicatorUnavailable(f"no volume at t={t}")
        return self._obv[t]

    def obv_trend_slopes(self, t: int, n: int):
        self._sync()
        if self.volumes is None or t >= len(self._obv):
            return None, None
        try:
            peaks, troughs = self._extrema(self._obv, self._obv_peak, self._obv_trough, t, n)
        except IndicatorUnavailable:
            return None, None
        x8 = _slope(lowest_two(troughs)) if len(troughs) >= 2 else None
        x9 = _slope(highest_two(peaks)) if len(peaks) >= 2 else None
        return x8, x9

    def rs_log_ratio(self, t: int, n: int):
        return self._memoised(("rs", t, n), lambda: rs_log_ratio(self.prices, self.index, t, n))

    def rolling_max(self, t: int, n: int) -> float:
        return self._memoised(("max", t, n), lambda: rolling_max(self.prices, t, n))

    def features(self, t: int, params: FeatureParams, wanted=FEATURES) -> FeatureVector:
        """Feature vector at t, computing only the entries in ``wanted``."""
        fv = FeatureVector()
        wanted = set(wanted)
        if "x1" in wanted:
            try:
                fv.x1 = self.ma_log_ratio(t, params.m, params.n)
            except IndicatorUnavailable:
                pass
        if wanted & {"x2", "x3"}:
            fv.x2, fv.x3 = self.breakout_ratios(t, params.n_star)
        if wanted & {"x4", "x5"}:
            fv.x4, fv.x5 = self.trendline_ratios(t, params.n_star)
        if wanted & {"x6", "x7"}:
            fv.x6, fv.x7 = self.band_ratios(t, params.n)
        if wanted & {"x8", "x9"}:
            fv.x8, fv.x9 = self.obv_trend_slopes(t, params.n)
        if "x10" in wanted:
            fv.x10 = self.rs_log_ratio(t, params.n)
        return fv


def _extend_flags(values, peak_flags: list[bool], trough_flags: list[bool]) -> None:
    # Index k is classified once values[k + 1] exists; the endpoints never qualify.
    while len(peak_flags) < len(values) - 1:
        k = len(peak_flags)
        if k == 0:
            peak_flags.append(False)
            trough_flags.append(False)
            continue
        prev, cur, nxt = values[k - 1], values[k], values[k + 1]
        peak_flags.append(cur > prev and cur > nxt)
        trough_flags.append(cur < prev and cur < nxt)


def compute_features(
    prices: Sequence[float],
    t: int,
    params: FeatureParams = FeatureParams(),
    volumes: Optional[Sequence[float]] = None,
    index: Optional[Sequence[float]] = None,
    band_mode: str = "literal",
) -> FeatureVector:
    """Feature vector at t straight from the window functions (no caching)."""
    fv = FeatureVector()
    try:
        fv.x1 = ma_log_ratio(prices, t, params.m, params.n)
    except IndicatorUnavailable:
        pass
    fv.x2, fv.x3 = breakout_ratios(prices, t, params.n_star)
    fv.x4, fv.x5 = trendline_ratios(prices, t, params.n_star)
    fv.x6, fv.x7 = band_ratios(prices, t, params.n, band_mode)
    if volumes is not None and len(volumes) > t:
        fv.x8, fv.x9 = obv_trend_slopes(obv_series(prices, volumes, t), t, params.n)
    fv.x10 = rs_log_ratio(prices, index, t, params.n)
    return fv
