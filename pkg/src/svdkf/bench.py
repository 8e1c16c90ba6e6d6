"""Monte-Carlo runner and ill-conditioning sweep.

Every run simulates one trajectory from a per-run seed split off the base
seed and feeds the identical measurement history to every selected filter,
so cross-filter comparisons are run-for-run fair.  Timing is the mean
wall-clock of the complete per-run filter pass, excluding simulation and
metric evaluation.  ``FK_THREADS`` caps parallel runs (0 = auto, default
sequential).
"""

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput
from .filters import Failure, make_filter
from .metrics import ErrorReport, error_report
from .model import StateSpaceModel, example2, simulate

FILTER_ORDER = ("kf", "srkf", "udkf", "svd_srkf", "svd_kf")

DEFAULT_DELTAS = tuple(10.0**-i for i in range(1, 15))


@dataclass(frozen=True)
class RunConfig:
    model: StateSpaceModel
    filters: tuple = FILTER_ORDER
    runs: int = 100
    horizon: int = 100
    base_seed: int = 0
    timing: bool = True
    # benchmark protocol: truth starts at x0_mean; pi0 remains the
    # filters' initial uncertainty.  Flip on to sample x0 ~ N(x0_mean, pi0).
    sample_x0: bool = False

    def __post_init__(self):
        if self.runs < 1 or self.horizon < 1:
            raise InvalidInput("runs and horizon must be >= 1")
        if not self.filters:
            raise InvalidInput("filter set must be non-empty")
        for name in self.filters:
            if name.replace("-", "_") not in FILTER_ORDER:
                raise InvalidInput(f"unknown filter {name!r}")


@dataclass(frozen=True)
class FilterOutcome:
    errors: ErrorReport
    first_failure: Optional[Failure]
    failed_runs: int
    mean_cpu_s: float


@dataclass(frozen=True)
class MonteCarloReport:
    outcomes: dict  # filter name -> FilterOutcome
    trajectory_hash: str


@dataclass(frozen=True)
class SweepReport:
    deltas: tuple
    filters: tuple
    cells: dict = field(default_factory=dict)   # (delta, name) -> float | str
    mean_cpu_s: dict = field(default_factory=dict)

    def cell(self, delta: float, name: str):
        return self.cells[(delta, name.replace("-", "_"))]

    def min_finite_delta(self, name: str) -> Optional[float]:
        """Smallest delta at which the filter still produced a finite norm."""
        finite = [d for d in self.deltas
                  if isinstance(self.cell(d, name), float)]
        return min(finite) if finite else None


def split_seed(base_seed: int, run_index: int) -> int:
    """Stable per-run seed derivation from the base seed."""
    ss = np.random.SeedSequence([int(base_seed), int(run_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _n_workers() -> int:
    raw = os.environ.get("FK_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def monte_carlo(config: RunConfig) -> MonteCarloReport:
    names = tuple(n.replace("-", "_") for n in config.filters)
    model = config.model
    mm, kk, n = config.runs, config.horizon, model.n

    truth = np.empty((mm, kk, n))
    est = {name: np.empty((mm, kk, n)) for name in names}
    cpu = {name: np.zeros(mm) for name in names}
    failures: dict = {name: [] for name in names}
    hasher = hashlib.sha256()

    def one_run(j):
        traj = simulate(model, kk, seed=split_seed(config.base_seed, j),
                        sample_x0=config.sample_x0)
        results = {}
        for name in names:
            flt = make_filter(name, model)
            t0 = time.perf_counter()
            e, failure = flt.run(traj.measurements, traj.controls)
            elapsed = time.perf_counter() - t0
            results[name] = (e, failure, elapsed)
        return traj, results

    workers = _n_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            run_results = list(pool.map(one_run, range(mm)))
    else:
        run_results = [one_run(j) for j in range(mm)]

    for j, (traj, results) in enumerate(run_results):
        hasher.update(traj.measurements.tobytes())
        truth[j] = traj.states
        for name in names:
            e, failure, elapsed = results[name]
            est[name][j] = e
            cpu[name][j] = elapsed
            if failure is not None:
                failures[name].append((j, failure))

    outcomes = {}
    for name in names:
        first = failures[name][0][1] if failures[name] else None
        cause = first.cause if first is not None else None
        outcomes[name] = FilterOutcome(
            errors=error_report(truth, est[name], failure_cause=cause),
            first_failure=first,
            failed_runs=len(failures[name]),
            mean_cpu_s=float(np.mean(cpu[name])) if config.timing else 0.0,
        )
    return MonteCarloReport(outcomes=outcomes,
                            trajectory_hash=hasher.hexdigest())


def sweep(deltas, config: RunConfig) -> SweepReport:
    """Run the Monte-Carlo comparison on example2(delta) per delta.

    Cells hold the finite RMSE 2-norm, or the first failure class
    ("NaN" / "Inf" / "FactorizationFailure") when the filter diverged.
    """
    deltas = tuple(float(d) for d in deltas)
    if any(d <= 0 for d in deltas):
        raise InvalidInput("deltas must be positive")
    names = tuple(n.replace("-", "_") for n in config.filters)
    cells = {}
    cpu = {name: [] for name in names}
    for delta in deltas:
        cfg = RunConfig(model=example2(delta), filters=names,
                        runs=config.runs, horizon=config.horizon,
                        base_seed=config.base_seed, timing=config.timing,
                        sample_x0=config.sample_x0)
        report = monte_carlo(cfg)
        for name in names:
            out = report.outcomes[name]
            if out.errors.failed:
                cells[(delta, name)] = out.errors.failure_cause or "NaN"
            else:
                cells[(delta, name)] = out.errors.rmse_norm
            cpu[name].append(out.mean_cpu_s)
    mean_cpu = {name: float(np.mean(v)) for name, v in cpu.items()}
    return SweepReport(deltas=deltas, filters=names, cells=cells,
                       mean_cpu_s=mean_cpu)
