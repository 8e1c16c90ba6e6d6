"""Error metrics for the Monte-Carlo study: per-component RMSE over all
runs and steps, steady-state mean relative error, and the aggregate
2-norm used by the ill-conditioning sweep."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput

ZERO_FLOOR = 1e-6


@dataclass(frozen=True)
class ErrorReport:
    rmse: np.ndarray          # (n,), NaN where estimates diverged
    mre_percent: np.ndarray   # (n,), NaN where suppressed or diverged
    rmse_norm: float
    failed: bool
    failure_cause: Optional[str] = None


def rmse(truth, estimates) -> np.ndarray:
    """Componentwise root mean square error over runs and steps.

    truth and estimates are (M, K, n); NaN estimates propagate into the
    affected components, matching whole-cell NaN reporting.
    """
    t = np.asarray(truth, dtype=np.float64)
    e = np.asarray(estimates, dtype=np.float64)
    if t.ndim == 2:
        t = t[None]
        e = e[None]
    if t.shape != e.shape or t.ndim != 3:
        raise InvalidInput(
            f"shape mismatch: truth {t.shape} vs estimates {e.shape}")
    err = t - e
    with np.errstate(over="ignore", invalid="ignore"):
        return np.sqrt(np.mean(err * err, axis=(0, 1)))


def mre(truth_final, estimates_final, zero_floor: float = ZERO_FLOOR
        ) -> np.ndarray:
    """Steady-state mean relative error in percent, per component.

    Inputs are (M, n) values at the final step only.  Components whose
    mean absolute true value falls below zero_floor have no meaningful
    relative error and are reported as NaN.
    """
    t = np.atleast_2d(np.asarray(truth_final, dtype=np.float64))
    e = np.atleast_2d(np.asarray(estimates_final, dtype=np.float64))
    if t.shape != e.shape:
        raise InvalidInput(
            f"shape mismatch: truth {t.shape} vs estimates {e.shape}")
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.mean(np.abs(t - e) / np.abs(t), axis=0)
    out = 100.0 * rel
    out[np.mean(np.abs(t), axis=0) < zero_floor] = np.nan
    return out


def rmse_norm(rmse_vec) -> float:
    return float(np.linalg.norm(np.asarray(rmse_vec, dtype=np.float64)))


def error_report(truth, estimates, failure_cause: Optional[str] = None
                 ) -> ErrorReport:
    """Bundle RMSE / MRE / aggregate norm for one filter's estimates."""
    r = rmse(truth, estimates)
    t = np.asarray(truth, dtype=np.float64)
    e = np.asarray(estimates, dtype=np.float64)
    if t.ndim == 2:
        t = t[None]
        e = e[None]
    m = mre(t[:, -1, :], e[:, -1, :])
    failed = failure_cause is not None or not np.all(np.isfinite(r))
    return ErrorReport(rmse=r, mre_percent=m, rmse_norm=rmse_norm(r),
                       failed=failed, failure_cause=failure_cause)
