"""Small worked examples for each public operation, with hand-derived values."""

import math

import numpy as np
import pytest

from fuzzmarket.dsl import compile_rule_block, parse_rule_block
from fuzzmarket.dynamics import MarketState, Scenario, TraderGroup, simulate, update_portfolio
from fuzzmarket.errors import IndicatorUnavailable
from fuzzmarket.fuzzy import TermFamily, center_average
from fuzzmarket.indicators import (
    FeatureParams,
    _band_from,
    breakout_ratios,
    find_extrema,
    highest_two,
    lowest_two,
    ma_log_ratio,
    moving_average,
    moving_std,
    obv_series,
    obv_trend_slopes,
    resistance,
    rolling_max,
    rs_log_ratio,
    support,
    trend_line,
    trendline_ratios,
)
from fuzzmarket.rulegroups import INACTIVE, Portfolio, ed2, ed3, ed5, ed6, ed7, ed8, ed11, ed12

W = 0.01
FAM = TermFamily(W)


def test_membership_examples():
    assert FAM.membership("PS", 0.01) == 1.0
    assert FAM.membership("PL", 0.025) == pytest.approx(0.5)
    assert FAM.membership("AZ", -0.005) == pytest.approx(0.5)
    assert FAM.membership("PS", 0.0) == 0.0
    assert FAM.membership("PM", 0.02) == 1.0
    assert FAM.membership("NL", -0.05) == 1.0
    assert FAM.aggregate("Positive", 0.01) == 1.0
    assert FAM.aggregate("Negative", 0.005) == 0.0
    assert FAM.aggregate("Positive", 0.005) == pytest.approx(0.5)


def test_center_average_examples():
    assert center_average([(1.0, 0.1)]) == 0.1
    assert center_average([(0.5, 0.4), (0.5, -0.2)]) == pytest.approx(0.1)
    assert center_average([]) == 0.0


def test_moving_average_examples():
    assert moving_average([10.0] * 5, 4, 5) == 10.0
    assert moving_average([1.0, 2.0, 3.0], 2, 3) == 2.0
    assert moving_average([1.0, 2.0, 3.0], 2, 1) == 3.0


def test_ma_log_ratio_examples():
    assert ma_log_ratio([10.0] * 5, 4, 1, 5) == 0.0
    e = math.exp(0.05)
    prices = [10.0, 10.0, 10.0, 10.0, 10.0 * e]
    want = math.log(10 * e * 5 / (40 + 10 * e))
    assert ma_log_ratio(prices, 4, 1, 5) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(0.0398, abs=1e-4)
    assert ma_log_ratio([5.0, 4.0, 3.0, 2.0, 1.0], 4, 1, 5) < 0


def test_extrema_examples():
    values = [10, 12, 11, 13, 12.5, 12.8]
    assert find_extrema(values, 0, 5) == ([(1, 12), (3, 13)], [(2, 11), (4, 12.5)])
    assert find_extrema([1, 2, 3, 4], 0, 3) == ([], [])
    assert find_extrema([1, 2, 2, 1], 0, 3) == ([], [])


def test_support_resistance_examples():
    prices = [10, 12, 11, 13, 12.5, 12.8]
    assert resistance(prices, 5, 5) == 13
    assert support(prices, 5, 5) == 11
    with pytest.raises(IndicatorUnavailable):
        resistance([1, 2, 3, 4, 5, 6], 5, 5)


def test_breakout_examples():
    prices = [10, 12, 11, 13, 12.5, 13.0]
    assert breakout_ratios(prices, 5, 5)[0] == 0.0
    prices[-1] = 13 * math.exp(0.01)
    assert breakout_ratios(prices, 5, 5)[0] == pytest.approx(0.01, abs=1e-15)


def test_anchor_selection_examples():
    assert lowest_two([(2, 11), (4, 12.5), (7, 11.8)]) == ((2, 11), (7, 11.8))
    assert lowest_two([(3, 10.0), (5, 12), (9, 10.0)]) == ((3, 10.0), (9, 10.0))
    assert highest_two([(1, 5.0), (4, 5.0), (6, 5.0)]) == ((1, 5.0), (4, 5.0))


def test_trend_line_value_example():
    line = trend_line(((3, 10.0), (8, 10.5)), "up")
    assert line.slope == pytest.approx(0.1)
    assert line.intercept == pytest.approx(9.7)
    assert line.value_at(3) == 10.0 and line.value_at(8) == 10.5
    assert line.value_at(13) == pytest.approx(11.0, abs=1e-12)


def test_trendline_ratio_examples():
    # Troughs 10 (t=2) and 10.6 (t=5): the up line is at 11.4 at t=9.
    prices = [11, 10.8, 10.0, 11.2, 10.9, 10.6, 11.3, 11.6, 11.9, 11.4]
    x4, x5 = trendline_ratios(prices, 9, 9)
    assert x4 == pytest.approx(0.0, abs=1e-12)
    assert x5 is None  # peaks 11.2 then 11.3 rise: no down line
    prices[-1] = 11.4 * math.exp(0.01)
    assert trendline_ratios(prices, 9, 9)[0] == pytest.approx(0.01, abs=1e-12)


def test_moving_std_examples():
    prices = [10.0, 10.0 * math.exp(0.01), 10.0]
    assert moving_std(prices, 2, 2) == pytest.approx(0.01, abs=1e-15)
    assert moving_std([5.0] * 4, 3, 3) == 0.0
    assert moving_std([1.0, math.exp(0.02)], 1, 1) == pytest.approx(0.02, abs=1e-15)


def test_band_examples():
    assert _band_from(10.0, 10.0, 0.0, "literal") == (0.0, 0.0)
    x6, _ = _band_from(10.3, 10.0, 0.1, "literal")
    assert x6 == pytest.approx(math.log(10.3 / 10.2), abs=1e-15)
    assert x6 == pytest.approx(0.00975, abs=1e-5)
    assert _band_from(1.0, 0.1, 0.1, "literal")[1] is None


def test_obv_examples():
    assert obv_series([1.0, 2.0, 1.0, 1.0], [0.0, 5.0, 3.0, 2.0], 3)[1:] == [5.0, 2.0, 2.0]
    assert obv_series([1.0] * 4, [9.0] * 4, 3) == [0.0] * 4
    assert obv_series([1.0, 2.0, 3.0], [0.0, 4.0, 6.0], 2) == [0.0, 4.0, 10.0]


def test_obv_slope_examples():
    series = [150.0] * 13
    series[4], series[10] = 100.0, 130.0
    assert obv_trend_slopes(series, 12, 12)[0] == 5.0
    series[10] = 100.0
    assert obv_trend_slopes(series, 12, 12)[0] == 0.0
    series = [150.0] * 13
    series[2], series[8] = 200.0, 170.0
    assert obv_trend_slopes(series, 12, 12)[1] == -5.0


def test_relative_strength_examples():
    prices = [2.0, 4.0, 6.0, 8.0, 10.0]
    assert rs_log_ratio(prices, [p * 3 for p in prices], 4, 5) == pytest.approx(0.0, abs=1e-15)
    e = math.exp(0.05)
    want = math.log(5 * e / (4 + e))
    assert rs_log_ratio([1.0, 1.0, 1.0, 1.0, e], [1.0] * 5, 4, 5) == pytest.approx(want, abs=1e-15)
    assert rs_log_ratio([1.0] * 5, [1.0, 1.1, 1.2, 1.3, 1.4], 4, 5) < 0


def test_rolling_max_examples():
    assert rolling_max([1.0, 5.0, 3.0], 2, 3) == 5.0
    assert rolling_max([1.0, 5.0, 3.0], 2, 1) == 3.0
    assert rolling_max([2.0, 2.0, 2.0], 2, 3) == 2.0


def test_group_examples():
    assert ed2(W, 0.05, FAM).value == pytest.approx(0.1)
    assert ed2(-0.01, -2 * W, FAM).value == pytest.approx(-0.4)
    assert ed2(-0.005, 0.005, FAM) == INACTIVE
    assert ed3(-0.05, 0.0, FAM).value == pytest.approx(0.2)
    assert ed3(0.0, 0.05, FAM).value == pytest.approx(-0.2)
    assert ed3(-0.005, 0.005, FAM).value == pytest.approx(0.0, abs=1e-15)
    assert ed5(None, 3 * W, FAM).value == pytest.approx(0.4)
    assert ed5(-2 * W, None, FAM).value == pytest.approx(-0.1)
    assert ed5(-2.5 * W, None, FAM).value == pytest.approx(-0.25)
    assert ed6(0.0, FAM).value == 0.0
    assert ed6(W, FAM).value == pytest.approx(-0.1)
    assert ed6(W / 2, FAM).value == pytest.approx(-0.05)
    assert ed7(-W, FAM).value == pytest.approx(0.1)
    assert ed7(0.0, FAM).value == 0.0
    assert ed7(-3 * W, FAM).value == pytest.approx(0.4)
    assert ed8(-W, 1, FAM).value == pytest.approx(0.1)
    assert ed8(W, 3, FAM).value == pytest.approx(-0.1)
    assert ed11(None, W, 5.0, None, FAM).value == pytest.approx(0.2)
    assert ed11(-W, None, None, -5.0, FAM).value == pytest.approx(-0.2)
    assert ed11(0.05, -0.05, 1.0, 1.0, FAM) == INACTIVE
    assert ed12(None, W, W, FAM).value == pytest.approx(0.2)
    assert ed12(-W, None, -W, FAM).value == pytest.approx(-0.2)
    assert ed12(-W, W, 0.0, FAM) == INACTIVE


def test_always_zero_block_is_inactive():
    f = compile_rule_block(parse_rule_block("GROUP z { IF x1 IS PL AND x1 IS NL THEN ed IS BB; }"))
    for x in np.linspace(-0.1, 0.1, 41):
        assert f({"x1": float(x)}) == INACTIVE


def constant_group(action, strength):
    block = parse_rule_block(f"GROUP c{action} {{ IF x1 IS AZ THEN ed IS {action}; }}")
    return TraderGroup("dsl", strength, FeatureParams(m=1, n=2), block=block)


def test_step_examples():
    # Flat history: x1 = 0, AZ fires fully, so the group's demand is its center.
    state = MarketState([10.0, 10.0, 10.0])
    p, outcomes, inc = state.step([constant_group("BS", 0.2)])
    assert outcomes[0][0].value == 0.1
    assert p == pytest.approx(10 * math.exp(0.02), rel=1e-15)
    assert p == pytest.approx(10.2020, abs=1e-4)

    state = MarketState([10.0, 10.0, 10.0])
    assert state.step([TraderGroup("ed6", 1.0, FeatureParams(m=1, n=2))])[0] == pytest.approx(10.0, rel=1e-15)

    state = MarketState([10.0, 10.0, 10.0])
    p, _, inc = state.step([constant_group("BS", 0.3), constant_group("SS", 0.3)])
    assert inc == 0.0 and p == pytest.approx(10.0, rel=1e-15)


def test_bootstrap_volatility_examples():
    stds = []
    for seed in range(50):
        sc = Scenario(sigma=0.037, bootstrap_len=100, horizon=101, seed=seed)
        rec = simulate(sc)
        assert all(p > 0 for p in rec.price)
        stds.append(float(np.std(rec.returns("bootstrap"), ddof=1)))
    assert all(abs(s / 0.037 - 1) < 0.25 for s in stds)


def test_zero_group_keep_noise_is_random_walk():
    rec = simulate(Scenario(sigma=0.02, bootstrap_len=10, horizon=60, keep_noise=True, seed=1))
    eps = np.random.default_rng(1).standard_normal(60)
    assert rec.log_return == pytest.approx(list(0.02 * eps), abs=1e-15)


def test_portfolio_examples():
    pf = update_portfolio(Portfolio(), 0.4, 1.0, 10.0)
    assert pf.anchor_price == 10.0 and pf.amount == pytest.approx(0.4)
    pf = update_portfolio(Portfolio(), 0.2, 1.0, 10.0)
    pf = update_portfolio(pf, 0.2, 1.0, 12.0)
    assert pf.anchor_price == pytest.approx(11.0)
    assert update_portfolio(pf, -0.4, 2.5, 12.0).amount == 0.0
