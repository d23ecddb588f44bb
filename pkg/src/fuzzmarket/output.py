"""Record CSV files, run summaries and plot data."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import GroupColumn, Scenario, SimulationRecord, simulate
from .errors import ConfigError, FuzzMarketError, InvalidInput, NumericalFailure
from .stats import diagnostics

BASE_COLUMNS = ["t", "price", "log_return", "regime", "noise"]


def fmt(x: float) -> str:
    """12 significant digits, positional notation."""
    return np.format_float_positional(float(x) + 0.0, precision=12, unique=False, fractional=False, trim="-")


def echo_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".scenario.json")


def header(record: SimulationRecord) -> list[str]:
    cols = list(BASE_COLUMNS)
    for g in record.groups:
        cols += [f"ed_{g.id}", f"a_{g.id}", f"active_{g.id}"]
    return cols


def write_record_csv(record: SimulationRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header(record))
        for k in range(len(record)):
            row = [
                str(record.t[k]),
                fmt(record.price[k]),
                fmt(record.log_return[k]),
                record.regime[k],
                fmt(record.noise[k]),
            ]
            for g in record.groups:
                row += [fmt(g.ed[k]), fmt(g.strength[k]), "1" if g.active[k] else "0"]
            writer.writerow(row)


def read_record_csv(path) -> SimulationRecord:
    from .config import scenario_from_dict

    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            cols = next(reader)
        except StopIteration:
            raise InvalidInput(f"{path}: empty file") from None
        if cols[: len(BASE_COLUMNS)] != BASE_COLUMNS:
            raise InvalidInput(f"{path}: not a simulation record (header {cols[:5]})")
        extra = cols[len(BASE_COLUMNS) :]
        if len(extra) % 3:
            raise InvalidInput(f"{path}: group columns must come in ed/a/active triples")
        ids = [extra[k][3:] for k in range(0, len(extra), 3)]
        record = SimulationRecord(None, math.nan)
        record.groups = [GroupColumn(i, "") for i in ids]
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(cols):
                raise InvalidInput(f"{path}:{line_no}: expected {len(cols)} fields, got {len(row)}")
            try:
                record.t.append(int(row[0]))
                record.price.append(float(row[1]))
                record.log_return.append(float(row[2]))
                record.regime.append(row[3])
                record.noise.append(float(row[4]))
                for j, g in enumerate(record.groups):
                    base = len(BASE_COLUMNS) + 3 * j
                    g.ed.append(float(row[base]))
                    g.strength.append(float(row[base + 1]))
                    g.active.append(row[base + 2] == "1")
            except ValueError as exc:
                raise InvalidInput(f"{path}:{line_no}: {exc}") from None
    if record.t:
        record.initial_price = record.price[0] * math.exp(-record.log_return[0])
    echo = echo_path(path)
    if echo.exists():
        try:
            record.scenario = scenario_from_dict(json.loads(echo.read_text(encoding="utf-8")), echo.parent, str(echo))
        except (FuzzMarketError, ValueError):
            record.scenario = None
    return record


def summarize(record: SimulationRecord, jump_threshold: Optional[float] = None) -> dict:
    from .config import scenario_to_dict

    summary = {"rows": len(record), "final_price": record.price[-1] if record.price else None}
    try:
        summary["diagnostics"] = diagnostics(record, "model", jump_threshold).to_dict()
    except InvalidInput as exc:
        summary["diagnostics"] = {"error": str(exc)}
    if record.scenario is not None:
        summary["scenario"] = scenario_to_dict(record.scenario)
    return summary


def run(scenario: Scenario, out_path, jump_threshold: Optional[float] = None) -> dict:
    """Simulate, write the CSV plus the resolved-scenario echo, return a summary.

    On a numerical failure the partial record is still written before the
    exception propagates.
    """
    from .config import scenario_to_dict

    out_path = Path(out_path)
    echo_path(out_path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n", encoding="utf-8")
    try:
        record = simulate(scenario)
    except NumericalFailure as exc:
        if exc.record is not None:
            write_record_csv(exc.record, out_path)
        raise
    write_record_csv(record, out_path)
    return summarize(record, jump_threshold)


def emit_plot_data(record: SimulationRecord, out_path, svg_path=None) -> tuple[Path, Path]:
    """Write ``t price`` text data and an SVG line chart of the price path."""
    if len(record) == 0:
        raise InvalidInput("cannot plot an empty record")
    out_path = Path(out_path)
    svg_path = Path(svg_path) if svg_path is not None else out_path.with_suffix(".svg")
    lines = ["# t price"] + [f"{t} {fmt(p)}" for t, p in zip(record.t, record.price)]
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    svg_path.write_text(render_svg(record), encoding="utf-8")
    return out_path, svg_path


def render_svg(record: SimulationRecord, width: int = 800, height: int = 400) -> str:
    pad = 40
    ts = record.t
    lo, hi = min(record.price), max(record.price)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    t0, t1 = ts[0], ts[-1] if ts[-1] != ts[0] else ts[0] + 1

    def x(t):
        return pad + (t - t0) / (t1 - t0) * (width - 2 * pad)

    def y(p):
        return height - pad - (p - lo) / (hi - lo) * (height - 2 * pad)

    points = " ".join(f"{x(t):.2f},{y(p):.2f}" for t, p in zip(ts, record.price))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{pad - 10}" font-size="12">price {fmt(lo)} .. {fmt(hi)}</text>',
        f'<text x="{width - pad}" y="{height - pad + 20}" font-size="12" text-anchor="end">t = {t0} .. {ts[-1]}</text>',
    ]
    boundary = _regime_boundary(record)
    if boundary is not None:
        bx = f"{x(boundary):.2f}"
        parts.append(
            f'<line class="regime-boundary" data-t="{boundary}" x1="{bx}" y1="{pad}" x2="{bx}" '
            f'y2="{height - pad}" stroke="gray" stroke-dasharray="4 4"/>'
        )
    parts.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1" points="{points}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _regime_boundary(record: SimulationRecord) -> Optional[int]:
    # Last row of the bootstrap regime, if the record switches regime.
    for k in range(1, len(record)):
        if record.regime[k] != record.regime[k - 1]:
            return record.t[k - 1]
    return None
