"""Monte-Carlo harness: seeding, fairness, parallelism, sweep cells."""

import numpy as np
import pytest

from svdkf.bench import (DEFAULT_DELTAS, FILTER_ORDER, RunConfig, monte_carlo,
                         split_seed, sweep)
from svdkf.errors import InvalidInput
from svdkf.model import example1


def small_config(**kw):
    kw.setdefault("model", example1())
    kw.setdefault("runs", 5)
    kw.setdefault("horizon", 30)
    kw.setdefault("base_seed", 7)
    return RunConfig(**kw)


class TestConfig:
    def test_defaults(self):
        cfg = small_config()
        assert cfg.filters == FILTER_ORDER
        assert not cfg.sample_x0

    def test_validation(self):
        with pytest.raises(InvalidInput):
            small_config(runs=0)
        with pytest.raises(InvalidInput):
            small_config(horizon=0)
        with pytest.raises(InvalidInput):
            small_config(filters=())
        with pytest.raises(InvalidInput):
            small_config(filters=("ekf",))

    def test_dash_aliases_accepted(self):
        cfg = small_config(filters=("svd-kf",))
        assert monte_carlo(cfg).outcomes["svd_kf"].errors.rmse.shape == (4,)


class TestSplitSeed:
    def test_deterministic_and_distinct(self):
        seeds = [split_seed(42, j) for j in range(100)]
        assert seeds == [split_seed(42, j) for j in range(100)]
        assert len(set(seeds)) == 100
        assert split_seed(43, 0) != split_seed(42, 0)


class TestMonteCarlo:
    def test_reproducible(self):
        a = monte_carlo(small_config())
        b = monte_carlo(small_config())
        assert a.trajectory_hash == b.trajectory_hash
        for name in FILTER_ORDER:
            assert np.array_equal(a.outcomes[name].errors.rmse,
                                  b.outcomes[name].errors.rmse)

    def test_seed_changes_results(self):
        a = monte_carlo(small_config(base_seed=1))
        b = monte_carlo(small_config(base_seed=2))
        assert a.trajectory_hash != b.trajectory_hash

    def test_filters_see_identical_data(self):
        # equivalence on a well-conditioned model is the observable proof
        # that every filter consumed the same measurements
        rep = monte_carlo(small_config())
        ref = rep.outcomes["kf"].errors.rmse
        for name in FILTER_ORDER[1:]:
            assert np.max(np.abs(rep.outcomes[name].errors.rmse - ref)) < \
                1e-8 * max(float(np.max(ref)), 1.0)

    def test_parallel_matches_sequential(self, monkeypatch):
        seq = monte_carlo(small_config())
        monkeypatch.setenv("FK_THREADS", "4")
        par = monte_carlo(small_config())
        assert par.trajectory_hash == seq.trajectory_hash
        for name in FILTER_ORDER:
            assert np.array_equal(par.outcomes[name].errors.rmse,
                                  seq.outcomes[name].errors.rmse)

    def test_fk_threads_auto_and_garbage(self, monkeypatch):
        monkeypatch.setenv("FK_THREADS", "0")
        monte_carlo(small_config(runs=2))
        monkeypatch.setenv("FK_THREADS", "junk")
        monte_carlo(small_config(runs=2))

    def test_timing_populated(self):
        rep = monte_carlo(small_config())
        for name in FILTER_ORDER:
            assert rep.outcomes[name].mean_cpu_s > 0.0
        rep = monte_carlo(small_config(timing=False))
        assert rep.outcomes["kf"].mean_cpu_s == 0.0


class TestSweep:
    def test_default_deltas_shape(self):
        assert len(DEFAULT_DELTAS) == 14
        assert DEFAULT_DELTAS[0] == pytest.approx(0.1)
        assert DEFAULT_DELTAS[-1] == pytest.approx(1e-14)

    def test_cells_and_failure_tokens(self):
        cfg = small_config(runs=3, horizon=40)
        rep = sweep((1e-1, 1e-10), cfg)
        assert isinstance(rep.cell(1e-1, "kf"), float)
        assert rep.cell(1e-10, "kf") in ("NaN", "Inf")
        assert isinstance(rep.cell(1e-10, "svd_kf"), float)
        assert rep.min_finite_delta("svd_kf") == pytest.approx(1e-10)
        assert rep.min_finite_delta("kf") == pytest.approx(1e-1)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(InvalidInput):
            sweep((0.1, -0.5), small_config())
