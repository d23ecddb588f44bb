"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class FuzzMarketError(Exception):
    """Base class for all package errors."""


class InvalidParameter(FuzzMarketError, ValueError):
    pass


class InvalidInput(FuzzMarketError, ValueError):
    pass


class IndicatorUnavailable(FuzzMarketError, LookupError):
    """An indicator cannot be formed from the history available at time t."""


class ConfigError(FuzzMarketError, ValueError):
    """Scenario or input-file problem detected before a run starts."""


class NumericalFailure(FuzzMarketError, ArithmeticError):
    """The price recursion produced a non-finite value.

    ``record`` holds the rows simulated up to (and including) the failing one.
    """

    def __init__(self, message: str, record=None, row: dict | None = None):
        super().__init__(message)
        self.record = record
        self.row = row
