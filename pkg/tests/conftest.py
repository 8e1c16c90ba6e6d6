"""Shared test fixtures and independent reference implementations.

The oracle below is a deliberately plain textbook Kalman recursion using
explicit matrix inverses.  It shares no code with the package kernels, so
agreement between the two is meaningful evidence, not a tautology.
"""

import numpy as np
import pytest

from svdkf.model import StateSpaceModel


def naive_time_update(x, p, f, b, g, theta, u):
    x_prior = f @ x + b @ u
    p_prior = f @ p @ f.T + g @ theta @ g.T
    return x_prior, p_prior


def naive_meas_update(x_prior, p_prior, h, r, z):
    """Textbook measurement update; returns (x, p, e, re, gain)."""
    e = z - h @ x_prior
    re = h @ p_prior @ h.T + r
    gain = p_prior @ h.T @ np.linalg.inv(re)
    x = x_prior + gain @ e
    p = p_prior - gain @ re @ gain.T
    return x, p, e, re, gain


def naive_kf_run(model, measurements, controls=None):
    """Full reference pass; returns (estimates, innovations, re_list)."""
    kk = measurements.shape[0]
    if controls is None:
        controls = np.zeros((kk, model.d))
    x = model.x0_mean.copy()
    p = model.pi0.copy()
    est = np.empty((kk, model.n))
    innovations, res = [], []
    for k in range(kk):
        f, b, g, h, theta, r = model.matrices_at(k + 1)
        x, p = naive_time_update(x, p, f, b, g, theta, controls[k])
        x, p, e, re, _ = naive_meas_update(x, p, h, r, measurements[k])
        est[k] = x
        innovations.append(e)
        res.append(re)
    return est, innovations, res


def naive_loglik(innovations, res):
    """Sum of Gaussian innovation log-densities via det and inv."""
    total = 0.0
    for e, re in zip(innovations, res):
        m = e.size
        total += -0.5 * m * np.log(2.0 * np.pi) \
            - 0.5 * np.log(np.linalg.det(re)) \
            - 0.5 * float(e @ np.linalg.inv(re) @ e)
    return total


def random_spd(rng, n, jitter=0.5):
    a = rng.standard_normal((n, n))
    return a @ a.T + jitter * np.eye(n)


def random_model(rng, n=None, m=None, p=None) -> StateSpaceModel:
    """Well-conditioned random time-invariant model."""
    n = n or int(rng.integers(2, 6))
    m = m or int(rng.integers(1, 4))
    p = p or int(rng.integers(1, n + 1))
    f = rng.standard_normal((n, n))
    f *= 0.9 / max(np.max(np.abs(np.linalg.eigvals(f))), 1e-3)
    return StateSpaceModel(
        f=f,
        b=rng.standard_normal((n, 1)),
        g=rng.standard_normal((n, p)),
        h=rng.standard_normal((m, n)),
        theta=random_spd(rng, p),
        r=random_spd(rng, m),
        x0_mean=rng.standard_normal(n),
        pi0=random_spd(rng, n),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
