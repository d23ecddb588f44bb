"""Command-line entry point: ``fuzzmarket run|preset|stats|plot|check``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .config import load_scenario, scenario_to_dict
from .dsl import check_rule_source, format_rule_block
from .errors import FuzzMarketError, NumericalFailure
from .output import emit_plot_data, read_record_csv, run
from .presets import figure_preset
from .stats import diagnostics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _seed_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if not sep or b < a:
        raise argparse.ArgumentTypeError(f"expected A..B with A <= B, got {text!r}")
    return range(a, b + 1)


def _seed_path(out: Path, seed: int) -> Path:
    return out.with_name(f"{out.stem}.seed{seed}{out.suffix}")


def _run_one(scenario_path: str, seed: Optional[int], out: str, jump_threshold: Optional[float]) -> dict:
    scenario = load_scenario(scenario_path, seed)
    summary = run(scenario, out, jump_threshold)
    summary["csv"] = out
    return summary


def _batch_job(args: tuple) -> tuple[int, int, object]:
    # Runs in a worker process; errors come back as values so one bad seed
    # does not abort the others.
    scenario_path, seed, out, threshold = args
    try:
        return seed, EXIT_OK, _run_one(scenario_path, seed, out, threshold)
    except NumericalFailure as exc:
        return seed, EXIT_NUMERIC, str(exc)
    except (FuzzMarketError, OSError) as exc:
        return seed, EXIT_CONFIG, str(exc)


def cmd_run(args) -> int:
    out = Path(args.out) if args.out else Path(args.scenario).with_suffix(".csv")
    if args.seeds is None:
        summary = _run_one(args.scenario, args.seed, str(out), args.jump_threshold)
        print(json.dumps(summary, indent=2))
        return EXIT_OK
    jobs = [(args.scenario, s, str(_seed_path(out, s)), args.jump_threshold) for s in args.seeds]
    status = EXIT_OK
    results = []
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for seed, code, payload in pool.map(_batch_job, jobs):
            if code != EXIT_OK:
                print(f"seed {seed}: {payload}", file=sys.stderr)
                status = max(status, code)
                continue
            results.append({"seed": seed, **payload})
    print(json.dumps(results, indent=2))
    return status


def cmd_preset(args) -> int:
    scenario = figure_preset(args.name, alternate=args.alternate, seed=args.seed)
    print(json.dumps(scenario_to_dict(scenario), indent=2))
    return EXIT_OK


def cmd_stats(args) -> int:
    result = diagnostics(args.csv, args.regime, args.jump_threshold, args.lag)
    print(json.dumps(result.to_dict(), indent=2))
    return EXIT_OK


def cmd_plot(args) -> int:
    record = read_record_csv(args.csv)
    data = Path(args.data) if args.data else Path(args.csv).with_suffix(".plot.txt")
    emit_plot_data(record, data, args.svg)
    print(json.dumps({"data": str(data), "svg": args.svg}))
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        source = Path(args.rules).read_bytes()
    except OSError as exc:
        print(f"{args.rules}: cannot read: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    block, diags = check_rule_source(source)
    for d in diags:
        print(f"{args.rules}:{d}", file=sys.stderr)
    if block is None:
        return EXIT_CONFIG
    if args.format:
        sys.stdout.write(format_rule_block(block))
    else:
        print(f"{args.rules}: ok, group {block.name}, {len(block.rules)} rules, features {', '.join(block.features)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzmarket", description="Fuzzy-rule market dynamics simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario file and write a CSV record")
    p.add_argument("scenario")
    p.add_argument("--out", help="CSV path (default: scenario path with .csv)")
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="override the scenario seed")
    seeds.add_argument("--seeds", type=_seed_range, metavar="A..B", help="run seeds A..B concurrently, one CSV each")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for --seeds")
    p.add_argument("--jump-threshold", type=float, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="print a named scenario as JSON")
    p.add_argument("name")
    p.add_argument("--alternate", action="store_true", help="use the alternate value where sources disagree")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("stats", help="return diagnostics of a record CSV")
    p.add_argument("csv")
    p.add_argument("--regime", default="model", help="model, bootstrap or all")
    p.add_argument("--jump-threshold", type=float, default=None)
    p.add_argument("--lag", type=int, default=1)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("plot", help="write t/price plot data and an SVG chart")
    p.add_argument("csv")
    p.add_argument("--svg", required=True)
    p.add_argument("--data", help="text data path (default: CSV path with .plot.txt)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("check", help="parse a rule file and report diagnostics")
    p.add_argument("rules")
    p.add_argument("--format", action="store_true", help="print the normalized rule text")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"fuzzmarket: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FuzzMarketError, OSError) as exc:
        print(f"fuzzmarket: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
