"""Discrete-time Kalman filtering in factored forms.

Five algebraically equivalent filter implementations (conventional,
Cholesky square-root, UD, and two SVD-based variants) plus a seeded
Monte-Carlo harness for comparing their behavior on well-conditioned and
ill-conditioned state estimation problems.
"""

from ._dispatch import NUMBA_ENABLED
from .bench import MonteCarloReport, RunConfig, SweepReport, monte_carlo, sweep
from .errors import (FactorizationFailure, FilterFailed, InvalidInput,
                     InvalidModel, NotPositiveSemidefinite, SvdkfError)
from .filters import (FILTERS, CholeskySrKF, ConventionalKF, Failure,
                      StepReport, SvdKF, SvdSrKF, UdKF, loglik_conventional,
                      loglik_svd, make_filter, reconstruct_covariance)
from .metrics import ErrorReport, error_report, mre, rmse, rmse_norm
from .model import (StateSpaceModel, Trajectory, example1, example2,
                    load_model, resolve_model, simulate)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "MonteCarloReport", "RunConfig", "SweepReport", "monte_carlo", "sweep",
    "FactorizationFailure", "FilterFailed", "InvalidInput", "InvalidModel",
    "NotPositiveSemidefinite", "SvdkfError",
    "FILTERS", "CholeskySrKF", "ConventionalKF", "Failure", "StepReport",
    "SvdKF", "SvdSrKF", "UdKF", "loglik_conventional", "loglik_svd",
    "make_filter", "reconstruct_covariance",
    "ErrorReport", "error_report", "mre", "rmse", "rmse_norm",
    "StateSpaceModel", "Trajectory", "example1", "example2", "load_model",
    "resolve_model", "simulate",
    "__version__",
]
