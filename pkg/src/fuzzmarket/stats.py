"""Return diagnostics: jumps, autocorrelation, kurtosis, per-regime moments."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput

MIN_RETURNS = 10
JUMP_SIGMAS = 4.0


@dataclass
class Diagnostics:
    regime: str
    count: int
    jump_threshold: float
    jump_count: int
    lag: int
    autocorrelation: float
    autocorrelation_defined: bool
    excess_kurtosis: float
    kurtosis_defined: bool
    regimes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def autocorrelation(r: np.ndarray, lag: int = 1) -> tuple[float, bool]:
    """Sample autocorrelation sum((r_t - m)(r_{t+k} - m)) / sum((r_t - m)^2).

    Returns ``(0.0, False)`` when the series has no variance.
    """
    r = np.asarray(r, dtype=float)
    if lag < 1 or lag >= len(r):
        raise InvalidInput(f"lag must be in [1, {len(r) - 1}], got {lag}")
    d = r - r.mean()
    den = float(np.dot(d, d))
    if den <= 0.0:
        return 0.0, False
    return float(np.dot(d[:-lag], d[lag:]) / den), True


def excess_kurtosis(r: np.ndarray) -> tuple[float, bool]:
    """Moment estimator m4 / m2^2 - 3; ``(0.0, False)`` for a constant series."""
    d = np.asarray(r, dtype=float) - np.mean(r)
    m2 = float(np.mean(d**2))
    if m2 <= 0.0:
        return 0.0, False
    return float(np.mean(d**4) / m2**2 - 3.0), True


def jump_count(r: np.ndarray, threshold: float) -> int:
    return int(np.count_nonzero(np.abs(np.asarray(r, dtype=float)) > threshold))


def compute_diagnostics(
    returns: np.ndarray,
    regimes: np.ndarray,
    regime: str = "model",
    threshold: Optional[float] = None,
    sigma: Optional[float] = None,
    lag: int = 1,
) -> Diagnostics:
    returns = np.asarray(returns, dtype=float)
    regimes = np.asarray(regimes)
    if regime == "all":
        mask = np.ones(len(returns), dtype=bool)
    else:
        mask = regimes == regime
    r = returns[mask]
    if len(r) < MIN_RETURNS:
        raise InvalidInput(f"regime {regime!r} has {len(r)} returns, need at least {MIN_RETURNS}")
    if threshold is None:
        if sigma is None:
            boot = returns[regimes == "bootstrap"]
            sigma = float(np.std(boot, ddof=1)) if len(boot) > 1 else float(np.std(returns, ddof=1))
        threshold = JUMP_SIGMAS * sigma
    ac, ac_ok = autocorrelation(r, lag)
    ku, ku_ok = excess_kurtosis(r)
    per_regime = {}
    for name in dict.fromkeys(regimes[mask].tolist()):
        sub = returns[mask & (regimes == name)]
        per_regime[name] = {
            "count": int(len(sub)),
            "mean": float(np.mean(sub)),
            "std": float(np.std(sub, ddof=1)) if len(sub) > 1 else 0.0,
        }
    return Diagnostics(
        regime=regime,
        count=int(len(r)),
        jump_threshold=float(threshold),
        jump_count=jump_count(r, threshold),
        lag=lag,
        autocorrelation=ac,
        autocorrelation_defined=ac_ok,
        excess_kurtosis=ku,
        kurtosis_defined=ku_ok,
        regimes=per_regime,
    )


def diagnostics(record, regime: str = "model", threshold: Optional[float] = None, lag: int = 1) -> Diagnostics:
    """Diagnostics of a :class:`SimulationRecord` or of a record CSV path.

    The jump threshold defaults to 4 sigma of the scenario; for a bare CSV
    the sigma comes from the echoed scenario file when present, otherwise
    from the bootstrap-regime returns.
    """
    from .output import read_record_csv

    if not hasattr(record, "log_return"):
        record = read_record_csv(record)
    sigma = record.scenario.sigma if record.scenario is not None else None
    return compute_diagnostics(record.log_return, record.regime, regime, threshold, sigma, lag)
