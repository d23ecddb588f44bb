"""Fuzzy-rule trader groups driving a log-price excess-demand dynamic."""

from .config import load_scenario, scenario_from_dict, scenario_to_dict
from .dsl import compile_rule_block, load_rule_file, parse_rule_block
from .dynamics import ManipulatorSchedule, Scenario, Schedule, SimulationRecord, TraderGroup, simulate
from .errors import (
    ConfigError,
    FuzzMarketError,
    IndicatorUnavailable,
    InvalidInput,
    InvalidParameter,
    NumericalFailure,
)
from .fuzzy import TermFamily, center_average, make_term_family
from .indicators import FeatureParams, FeatureVector, compute_features
from .output import emit_plot_data, read_record_csv, run, write_record_csv
from .presets import figure_preset, manipulator_example
from .rulegroups import ExcessDemand, Portfolio, evaluate
from .stats import diagnostics

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ExcessDemand",
    "FeatureParams",
    "FeatureVector",
    "FuzzMarketError",
    "IndicatorUnavailable",
    "InvalidInput",
    "InvalidParameter",
    "ManipulatorSchedule",
    "NumericalFailure",
    "Portfolio",
    "Scenario",
    "Schedule",
    "SimulationRecord",
    "TermFamily",
    "TraderGroup",
    "center_average",
    "compile_rule_block",
    "compute_features",
    "diagnostics",
    "emit_plot_data",
    "evaluate",
    "figure_preset",
    "load_rule_file",
    "load_scenario",
    "make_term_family",
    "manipulator_example",
    "parse_rule_block",
    "read_record_csv",
    "run",
    "scenario_from_dict",
    "scenario_to_dict",
    "simulate",
    "write_record_csv",
]
