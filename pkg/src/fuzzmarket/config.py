"""Scenario JSON files and exogenous CSV series."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Optional

import jsonschema

from .dsl import RuleSyntaxError, format_rule_block, load_rule_file, parse_rule_block
from .dynamics import ManipulatorSchedule, Scenario, TraderGroup
from .errors import ConfigError
from .indicators import BAND_MODES, FeatureParams
from .rulegroups import Portfolio

SEED_ENV = "FUZZMARKET_SEED"

_window = {"type": "integer", "minimum": 1}
_phase = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
_series = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {"path": {"type": "string"}, "column": {"type": "string"}},
            "required": ["path"],
            "additionalProperties": False,
        },
    ]
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "p0": {"type": "number", "exclusiveMinimum": 0},
        "sigma": {"type": "number", "minimum": 0},
        "bootstrap_len": {"type": "integer", "minimum": 1},
        "horizon": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "keep_noise": {"type": "boolean"},
        "band_mode": {"enum": list(BAND_MODES)},
        "comment": {"type": "string"},
        "groups": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "kind": {"enum": [f"ed{i}" for i in range(1, 13)] + ["dsl"]},
                    "id": {"type": "string", "pattern": "^[A-Za-z0-9_]+$"},
                    "strength": {
                        "oneOf": [
                            {"type": "number", "minimum": 0},
                            {
                                "type": "array",
                                "minItems": 1,
                                "items": {
                                    "type": "array",
                                    "prefixItems": [{"type": "integer"}, {"type": "number", "minimum": 0}],
                                    "minItems": 2,
                                    "maxItems": 2,
                                },
                            },
                        ]
                    },
                    "params": {
                        "type": "object",
                        "properties": {
                            "m": _window,
                            "n": _window,
                            "n_star": _window,
                            "w": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "additionalProperties": False,
                    },
                    "dsl_path": {"type": "string"},
                    "dsl_source": {"type": "string"},
                },
                "required": ["kind", "strength"],
                "additionalProperties": False,
            },
        },
        "volume_csv": _series,
        "index_csv": _series,
        "manipulator": {
            "type": "object",
            "properties": {"phase1": _phase, "phase2": _phase, "phase3": _phase},
            "required": ["phase1", "phase2", "phase3"],
            "additionalProperties": False,
        },
        "portfolio": {
            "type": "object",
            "properties": {
                "amount": {"type": "number", "minimum": 0},
                "anchor_price": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["amount"],
            "additionalProperties": False,
        },
    },
    "required": ["sigma", "bootstrap_len", "horizon", "groups"],
    "additionalProperties": False,
}


def _where(error: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "<root>"


def validate_document(doc, source: str = "<scenario>") -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{source}: {_where(e)}: {e.message}" for e in errors]
        raise ConfigError("\n".join(lines))


def ingest_csv_series(path, column: str, horizon: Optional[int] = None, kind: str = "volume") -> list[float]:
    """Read one numeric column; row 1 is the first data row and maps to t = 0.

    ``kind="volume"`` rejects negative values, ``kind="index"`` requires
    strictly positive ones.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise ConfigError(f"{path}: no column {column!r} (header: {reader.fieldnames})")
            values = []
            for row_no, row in enumerate(reader, start=1):
                cell = (row.get(column) or "").strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ConfigError(f"{path}: row {row_no}, column {column!r}: not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise ConfigError(f"{path}: row {row_no}, column {column!r}: value must be finite")
                if kind == "volume" and v < 0:
                    raise ConfigError(f"{path}: row {row_no}, column {column!r}: negative volume {v}")
                if kind == "index" and v <= 0:
                    raise ConfigError(f"{path}: row {row_no}, column {column!r}: index level must be positive, got {v}")
                values.append(v)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from None
    if horizon is not None and len(values) < horizon:
        raise ConfigError(f"{path}: {len(values)} rows, but the horizon needs at least {horizon}")
    return values


def _series_spec(spec, base: Path, default_column: str) -> dict:
    if isinstance(spec, str):
        spec = {"path": spec}
    path = Path(spec["path"])
    if not path.is_absolute():
        path = base / path
    return {"path": str(path.resolve()), "column": spec.get("column", default_column)}


def scenario_from_dict(doc: dict, base_dir=".", source: str = "<scenario>") -> Scenario:
    validate_document(doc, source)
    base = Path(base_dir)
    groups = []
    for k, g in enumerate(doc["groups"]):
        params = g.get("params", {})
        block = None
        dsl_path = None
        if g["kind"] == "dsl":
            if ("dsl_path" in g) == ("dsl_source" in g):
                raise ConfigError(f"{source}: groups/{k}: a dsl group needs exactly one of dsl_path, dsl_source")
            try:
                if "dsl_path" in g:
                    p = Path(g["dsl_path"])
                    dsl_path = str((p if p.is_absolute() else base / p).resolve())
                    block = load_rule_file(dsl_path)
                else:
                    block = parse_rule_block(g["dsl_source"], f"{source}: groups/{k}/dsl_source")
            except OSError as exc:
                raise ConfigError(f"{source}: groups/{k}: cannot read {g['dsl_path']}: {exc.strerror}") from None
            except RuleSyntaxError as exc:
                raise ConfigError(str(exc)) from None
        elif "dsl_path" in g or "dsl_source" in g:
            raise ConfigError(f"{source}: groups/{k}: dsl_path/dsl_source only apply to kind 'dsl'")
        strength = g["strength"]
        try:
            groups.append(
                TraderGroup(
                    kind=g["kind"],
                    strength=strength,
                    params=FeatureParams(params.get("m", 1), params.get("n", 5), params.get("n_star", 100)),
                    w=params.get("w", 0.01),
                    block=block,
                    id=g.get("id"),
                    dsl_path=dsl_path,
                )
            )
        except ConfigError as exc:
            raise ConfigError(f"{source}: groups/{k}: {exc}") from None

    horizon = doc["horizon"]
    volume = index = None
    volume_source = index_source = None
    if "volume_csv" in doc:
        volume_source = _series_spec(doc["volume_csv"], base, "volume")
        volume = ingest_csv_series(volume_source["path"], volume_source["column"], horizon, "volume")
    if "index_csv" in doc:
        index_source = _series_spec(doc["index_csv"], base, "index")
        index = ingest_csv_series(index_source["path"], index_source["column"], horizon, "index")

    manipulator = None
    if "manipulator" in doc:
        m = doc["manipulator"]
        manipulator = ManipulatorSchedule(tuple(m["phase1"]), tuple(m["phase2"]), tuple(m["phase3"]))
    portfolio = None
    if "portfolio" in doc:
        pf = doc["portfolio"]
        try:
            portfolio = Portfolio(pf["amount"], pf.get("anchor_price"))
        except ValueError as exc:
            raise ConfigError(f"{source}: portfolio: {exc}") from None

    try:
        return Scenario(
            sigma=doc["sigma"],
            bootstrap_len=doc["bootstrap_len"],
            horizon=horizon,
            groups=groups,
            p0=doc.get("p0", 10.0),
            seed=doc.get("seed", 0),
            keep_noise=doc.get("keep_noise", False),
            band_mode=doc.get("band_mode", "literal"),
            volume=volume,
            index=index,
            manipulator=manipulator,
            portfolio=portfolio,
            comment=doc.get("comment"),
            volume_source=volume_source,
            index_source=index_source,
        )
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_scenario(path, seed: Optional[int] = None) -> Scenario:
    """Load and validate a scenario file.

    Seed precedence: explicit ``seed`` argument, then ``$FUZZMARKET_SEED``,
    then the file's own ``seed``.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    scenario = scenario_from_dict(doc, path.parent, str(path))
    override = seed if seed is not None else _env_seed()
    if override is not None:
        scenario = scenario.with_seed(override)
    return scenario


def _env_seed() -> Optional[int]:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def scenario_to_dict(scenario: Scenario) -> dict:
    """Fully resolved scenario, defaults included; loads back to the same run."""
    groups = []
    for g in scenario.groups:
        item = {
            "kind": g.kind,
            "id": g.id,
            "strength": g.strength.to_json(),
            "params": {"m": g.params.m, "n": g.params.n, "n_star": g.params.n_star, "w": g.w},
        }
        if g.kind == "dsl":
            if g.dsl_path is not None:
                item["dsl_path"] = g.dsl_path
            else:
                item["dsl_source"] = format_rule_block(g.block)
        groups.append(item)
    doc = {
        "p0": scenario.p0,
        "sigma": scenario.sigma,
        "bootstrap_len": scenario.bootstrap_len,
        "horizon": scenario.horizon,
        "seed": scenario.seed,
        "keep_noise": scenario.keep_noise,
        "band_mode": scenario.band_mode,
        "groups": groups,
    }
    if scenario.comment:
        doc["comment"] = scenario.comment
    if scenario.volume_source:
        doc["volume_csv"] = scenario.volume_source
    if scenario.index_source:
        doc["index_csv"] = scenario.index_source
    if scenario.manipulator is not None:
        m = scenario.manipulator
        doc["manipulator"] = {"phase1": list(m.phase1), "phase2": list(m.phase2), "phase3": list(m.phase3)}
    if scenario.portfolio is not None:
        pf = {"amount": scenario.portfolio.amount}
        if scenario.portfolio.anchor_price is not None:
            pf["anchor_price"] = scenario.portfolio.anchor_price
        doc["portfolio"] = pf
    return doc
