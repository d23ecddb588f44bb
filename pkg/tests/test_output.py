import json
import math

import numpy as np
import pytest

from fuzzmarket.dynamics import Scenario, SimulationRecord, TraderGroup, simulate
from fuzzmarket.errors import InvalidInput, NumericalFailure
from fuzzmarket.indicators import FeatureParams
from fuzzmarket.output import echo_path, emit_plot_data, fmt, read_record_csv, render_svg, run, write_record_csv
from fuzzmarket.presets import figure_preset
from fuzzmarket.stats import autocorrelation, compute_diagnostics, diagnostics, excess_kurtosis


def test_fmt_twelve_significant_digits():
    assert fmt(math.pi) == "3.14159265359"
    assert fmt(0.0012345678901234) == "0.00123456789012"
    assert fmt(-0.0) == "0"
    assert fmt(0.5) == "0.5"
    assert fmt(12345.0) == "12345"


def test_fig5_csv_shape(tmp_path):
    out = tmp_path / "fig5.csv"
    summary = run(figure_preset("fig5"), out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,price,log_return,regime,noise,ed_2,a_2,active_2"
    assert len(lines) == 501
    assert lines[1].startswith("1,") and lines[-1].startswith("500,")
    assert lines[100].split(",")[3] == "bootstrap" and lines[101].split(",")[3] == "model"
    assert summary["rows"] == 500 and "diagnostics" in summary and summary["final_price"] > 0
    assert json.loads(echo_path(out).read_text())["groups"][0]["kind"] == "ed2"


def test_zero_group_scenario_has_no_group_columns(tmp_path):
    out = tmp_path / "rw.csv"
    run(Scenario(sigma=0.02, bootstrap_len=10, horizon=40), out)
    assert out.read_text().splitlines()[0] == "t,price,log_return,regime,noise"


def test_rerun_is_byte_identical(tmp_path):
    sc = figure_preset("fig9", seed=7)
    run(sc, tmp_path / "a.csv")
    run(sc, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_csv_round_trip_diagnostics(tmp_path):
    sc = figure_preset("fig12", seed=3)
    rec = simulate(sc)
    out = tmp_path / "r.csv"
    run(sc, out)
    back = read_record_csv(out)
    assert back.scenario is not None and back.scenario.sigma == sc.sigma
    assert back.initial_price == pytest.approx(10.0, rel=1e-9)
    mem = diagnostics(rec).to_dict()
    disk = diagnostics(out).to_dict()
    for key in ("jump_threshold", "autocorrelation", "excess_kurtosis"):
        assert disk[key] == pytest.approx(mem[key], abs=1e-9)
    assert disk["jump_count"] == mem["jump_count"]
    assert disk["regimes"]["model"]["mean"] == pytest.approx(mem["regimes"]["model"]["mean"], abs=1e-9)


def test_read_rejects_foreign_csv(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidInput):
        read_record_csv(path)
    path.write_text("t,price,log_return,regime,noise\n1,2,zz,model,0\n")
    with pytest.raises(InvalidInput, match=":2:"):
        read_record_csv(path)


def test_partial_csv_on_numerical_failure(tmp_path):
    sc = Scenario(
        sigma=0.03,
        bootstrap_len=30,
        horizon=120,
        groups=[TraderGroup("ed1", 1e308, FeatureParams(m=1, n=5))],
        seed=3,
    )
    out = tmp_path / "boom.csv"
    with pytest.raises(NumericalFailure):
        run(sc, out)
    rows = out.read_text().splitlines()
    assert 31 <= len(rows) < 121


def test_unwritable_path():
    with pytest.raises(OSError):
        run(figure_preset("fig3"), "/nonexistent/dir/out.csv")


def test_plot_data_and_svg(tmp_path):
    rec = simulate(figure_preset("fig5"))
    data, svg = emit_plot_data(rec, tmp_path / "p.txt", tmp_path / "p.svg")
    lines = data.read_text().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) - 1 == 500
    assert lines[1].split() == ["1", fmt(rec.price[0])]
    text = svg.read_text()
    assert 'class="regime-boundary" data-t="100"' in text
    assert render_svg(rec) == text


def test_plot_empty_record_rejected(tmp_path):
    with pytest.raises(InvalidInput):
        emit_plot_data(SimulationRecord(None, 10.0), tmp_path / "p.txt")


def test_write_then_read_preserves_values(tmp_path):
    rec = simulate(figure_preset("fig10", seed=2))
    path = tmp_path / "r.csv"
    write_record_csv(rec, path)
    back = read_record_csv(path)
    assert back.t == rec.t and back.regime == rec.regime
    assert back.price == pytest.approx(rec.price, rel=1e-11)
    assert [g.id for g in back.groups] == ["1", "7"]
    assert back.groups[1].active == rec.groups[1].active


# ---- statistics ----


def test_constant_prices():
    r = np.zeros(50)
    d = compute_diagnostics(r, np.array(["model"] * 50), threshold=0.1)
    assert d.jump_count == 0
    assert d.autocorrelation == 0.0 and not d.autocorrelation_defined
    assert not d.kurtosis_defined


@pytest.mark.parametrize("n", [10, 100, 1000])
def test_alternating_series_autocorrelation(n):
    r = np.array([0.01 * (-1) ** k for k in range(n)])
    ac, ok = autocorrelation(r, 1)
    # Zero mean for even n, so the sample formula gives exactly -(n-1)/n.
    assert ok and ac == pytest.approx(-(n - 1) / n, abs=1e-12)


def test_single_big_return_is_one_jump():
    r = np.zeros(20)
    r[5] = 10 * 0.05
    d = compute_diagnostics(r, np.array(["model"] * 20), threshold=0.05)
    assert d.jump_count == 1


def test_slice_too_short():
    with pytest.raises(InvalidInput):
        compute_diagnostics(np.zeros(9), np.array(["model"] * 9))


def test_default_threshold_from_bootstrap():
    rng = np.random.default_rng(0)
    r = rng.normal(0, 0.02, 200)
    regimes = np.array(["bootstrap"] * 100 + ["model"] * 100)
    d = compute_diagnostics(r, regimes)
    assert d.jump_threshold == pytest.approx(4 * np.std(r[:100], ddof=1))
    assert d.count == 100 and list(d.regimes) == ["model"]
    assert compute_diagnostics(r, regimes, sigma=0.05).jump_threshold == pytest.approx(0.2)


def test_kurtosis_matches_moment_formula():
    rng = np.random.default_rng(1)
    r = rng.standard_t(5, 400)
    d = r - r.mean()
    expected = (np.mean(d**4)) / (np.mean(d**2)) ** 2 - 3
    assert excess_kurtosis(r)[0] == pytest.approx(expected, rel=1e-12)


def test_regime_all_and_lag():
    r = np.sin(np.arange(60) / 3.0)
    d = compute_diagnostics(r, np.array(["bootstrap"] * 30 + ["model"] * 30), regime="all", threshold=1, lag=2)
    assert d.count == 60 and d.lag == 2 and set(d.regimes) == {"bootstrap", "model"}
    with pytest.raises(InvalidInput):
        autocorrelation(r, 0)
