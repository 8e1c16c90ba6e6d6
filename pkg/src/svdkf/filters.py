"""Five algebraically equivalent Kalman filter implementations.

All variants share the interface of ``KalmanFilterBase``: construct from a
``StateSpaceModel``, call ``step(z, u)`` per measurement (or ``run`` for a
whole trajectory), inspect ``x_hat`` / ``covariance`` / ``failure``.

A filter never raises on numeric breakdown mid-run; NaN/Inf/underflow
transitions it to a terminal failed status carrying the cause and step
index, which is exactly what the ill-conditioning sweep records.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .arrays import cholesky_upper, svd_factor_psd, ud_decompose
from .errors import FilterFailed, InvalidInput, NotPositiveSemidefinite
from .model import StateSpaceModel

LOG_2PI = math.log(2.0 * math.pi)

_STATUS_CAUSE = {
    _kernels.FAIL_NAN: "NaN",
    _kernels.FAIL_INF: "Inf",
    _kernels.FAIL_FACT: "FactorizationFailure",
}


def _quiet():
    return np.errstate(divide="ignore", invalid="ignore", over="ignore")


# ---------------------------------------------------------------------------
# covariance representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FullCov:
    p: np.ndarray

    def to_matrix(self) -> np.ndarray:
        return self.p


@dataclass(frozen=True)
class CholCov:
    s: np.ndarray  # upper triangular, P = s's

    def to_matrix(self) -> np.ndarray:
        return self.s.T @ self.s


@dataclass(frozen=True)
class UdCov:
    u: np.ndarray
    d: np.ndarray  # 1-D

    def to_matrix(self) -> np.ndarray:
        return (self.u * self.d) @ self.u.T


@dataclass(frozen=True)
class SvdCov:
    q: np.ndarray
    d_sqrt: np.ndarray  # 1-D

    def to_matrix(self) -> np.ndarray:
        return (self.q * self.d_sqrt**2) @ self.q.T


def reconstruct_covariance(cov) -> np.ndarray:
    """Multiply a covariance representation back out, symmetrized."""
    m = cov.to_matrix()
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class StepReport:
    innovation: np.ndarray
    innovation_cov: object
    gain: np.ndarray
    loglik_increment: float
    normalized_innovation: Optional[np.ndarray] = None
    normalized_gain: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Failure:
    cause: str  # NaN | Inf | FactorizationFailure
    step: int


def _loglik_full(e, re) -> float:
    m = e.size
    sign, logdet = np.linalg.slogdet(re)
    if sign <= 0:
        return math.nan
    quad = float(e @ np.linalg.solve(re, e))
    return -0.5 * m * LOG_2PI - 0.5 * (logdet + quad)


def loglik_conventional(reports) -> float:
    """Innovation log-likelihood from full innovation covariances."""
    total = 0.0
    for rep in reports:
        re = reconstruct_covariance(rep.innovation_cov)
        total += _loglik_full(rep.innovation, re)
    return total


def loglik_svd(reports) -> float:
    """Innovation log-likelihood from SVD innovation factors.

    Uses det R_e = det D_Re and e' Re^-1 e = ebar' D^-1 ebar, so it equals
    the conventional form exactly in exact arithmetic.
    """
    total = 0.0
    for rep in reports:
        if rep.normalized_innovation is None or \
                not isinstance(rep.innovation_cov, SvdCov):
            raise InvalidInput(
                "loglik_svd needs SVD innovation factors (SVD-KF reports)")
        d_re = rep.innovation_cov.d_sqrt**2
        ebar = rep.normalized_innovation
        m = ebar.size
        total += -0.5 * m * LOG_2PI \
            - 0.5 * (float(np.sum(np.log(d_re))) + float(ebar @ (ebar / d_re)))
    return total


# ---------------------------------------------------------------------------
# filter base
# ---------------------------------------------------------------------------

class KalmanFilterBase:
    """Common stepping/running logic; subclasses hold the factored state."""

    name: str = ""

    def __init__(self, model: StateSpaceModel):
        self.model = model
        self.k = 0
        self.failure: Optional[Failure] = None
        self.x = model.x0_mean.copy()
        try:
            self._init_state()
        except NotPositiveSemidefinite:
            self.failure = Failure("FactorizationFailure", 0)

    # subclass hooks -------------------------------------------------------
    def _init_state(self):
        raise NotImplementedError

    def _time_kernel(self, u):
        raise NotImplementedError

    def _meas_kernel(self, z) -> StepReport:
        raise NotImplementedError

    def _cov_repr(self):
        raise NotImplementedError

    def _run_kernel(self, zs, us):
        raise NotImplementedError

    # public API -----------------------------------------------------------
    @property
    def x_hat(self) -> np.ndarray:
        return self.x

    @property
    def covariance(self) -> np.ndarray:
        return reconstruct_covariance(self._cov_repr())

    @property
    def cov_repr(self):
        return self._cov_repr()

    def _check_failed(self):
        if self.failure is not None:
            raise FilterFailed(
                f"{self.name} failed at step {self.failure.step} "
                f"({self.failure.cause})")

    def _fail(self, status: int):
        self.failure = Failure(_STATUS_CAUSE[status], self.k)

    def _status_of_state(self) -> int:
        st = _kernels._finite_class(np.atleast_2d(self.x))
        for arr in self._state_arrays():
            st = _kernels._combine(st, _kernels._finite_class(np.atleast_2d(arr)))
        return st

    def _state_arrays(self):
        raise NotImplementedError

    def time_update(self, u=None):
        self._check_failed()
        self.k += 1
        if u is None:
            u = np.zeros(self.model.d)
        with _quiet():
            self._time_kernel(np.asarray(u, dtype=np.float64))
        if self.failure is None:
            st = self._status_of_state()
            if st != _kernels.OK:
                self._fail(st)

    def measurement_update(self, z) -> Optional[StepReport]:
        self._check_failed()
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        with _quiet():
            rep = self._meas_kernel(z)
        if self.failure is None:
            st = self._status_of_state()
            if st != _kernels.OK:
                self._fail(st)
                return None
        return rep if self.failure is None else None

    def step(self, z, u=None) -> Optional[StepReport]:
        self.time_update(u)
        if self.failure is not None:
            return None
        return self.measurement_update(z)

    def run(self, measurements, controls=None):
        """Filter a whole trajectory; returns (estimates, failure).

        Estimates are the a-posteriori states, one row per step; rows from
        the failure step onward are NaN when the filter diverges.  Uses the
        compiled run kernel for time-invariant models.
        """
        zs = np.ascontiguousarray(measurements, dtype=np.float64)
        kk = zs.shape[0]
        if controls is None:
            controls = np.zeros((kk, self.model.d))
        us = np.ascontiguousarray(controls, dtype=np.float64)
        if self.failure is not None:
            return np.full((kk, self.model.n), np.nan), self.failure
        if self.model.time_invariant:
            with _quiet():
                est, status, step = self._run_kernel(zs, us)
            if status != _kernels.OK:
                self.failure = Failure(_STATUS_CAUSE[status], step)
            self.k += kk
            if status == _kernels.OK and kk:
                self.x = est[-1].copy()
            return est, self.failure
        est = np.full((kk, self.model.n), np.nan)
        for k in range(kk):
            self.step(zs[k], us[k])
            if self.failure is not None:
                break
            est[k] = self.x
        return est, self.failure


# ---------------------------------------------------------------------------
# conventional filter
# ---------------------------------------------------------------------------

class ConventionalKF(KalmanFilterBase):
    """Textbook recursion on the full covariance, Eq.-(7)-style update.

    The posterior covariance is deliberately not symmetrized so the
    ill-conditioned breakdown behavior is observable.
    """

    name = "kf"

    def _init_state(self):
        self.p = self.model.pi0.copy()

    def _state_arrays(self):
        return (self.p,)

    def _cov_repr(self):
        return FullCov(self.p)

    def _time_kernel(self, u):
        f, bm, g, _h, th, _r = self.model.matrices_at(self.k)
        self.x, self.p = _kernels.kf_time_step(self.x, self.p, f, bm, g, th, u)

    def _meas_kernel(self, z):
        _f, _bm, _g, h, _th, r = self.model.matrices_at(self.k)
        self.x, self.p, e, re, kg = _kernels.kf_meas_step(
            self.x, self.p, h, r, z)
        return StepReport(innovation=e, innovation_cov=FullCov(re), gain=kg,
                          loglik_increment=_loglik_full(e, re))

    def _run_kernel(self, zs, us):
        m = self.model
        return _kernels.run_kf(m.f, m.b, m.g, m.h, m.theta, m.r,
                               self.x, self.p, zs, us)


# ---------------------------------------------------------------------------
# Cholesky square-root filter
# ---------------------------------------------------------------------------

class CholeskySrKF(KalmanFilterBase):
    """Array square-root filter propagating the upper Cholesky factor."""

    name = "srkf"

    def _init_state(self):
        m = self.model
        self.s = cholesky_upper(m.pi0)
        self.th_sqrt = cholesky_upper(m.theta)
        self.r_sqrt = cholesky_upper(m.r)

    def _state_arrays(self):
        return (self.s,)

    def _cov_repr(self):
        return CholCov(self.s)

    def _time_kernel(self, u):
        f, bm, g, _h, _th, _r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            self.th_sqrt = cholesky_upper(self.model.matrices_at(self.k)[4])
        self.x, self.s = _kernels.srkf_time_step(
            self.x, self.s, f, bm, g, self.th_sqrt, u)

    def _meas_kernel(self, z):
        _f, _bm, _g, h, _th, _r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            self.r_sqrt = cholesky_upper(self.model.matrices_at(self.k)[5])
        self.x, self.s, e, re_sqrt, kbar = _kernels.srkf_meas_step(
            self.x, self.s, h, self.r_sqrt, z)
        kg = np.linalg.solve(re_sqrt, kbar).T
        y = _kernels.tri_solve_lower(np.ascontiguousarray(re_sqrt.T), e)
        m = e.size
        logdet = 2.0 * float(np.sum(np.log(np.diag(re_sqrt))))
        inc = -0.5 * m * LOG_2PI - 0.5 * (logdet + float(y @ y))
        return StepReport(innovation=e, innovation_cov=CholCov(re_sqrt),
                          gain=kg, loglik_increment=inc)

    def _run_kernel(self, zs, us):
        m = self.model
        return _kernels.run_srkf(m.f, m.b, m.g, m.h, self.th_sqrt,
                                 self.r_sqrt, self.x, self.s, zs, us)


# ---------------------------------------------------------------------------
# UD filter (Thornton / Bierman)
# ---------------------------------------------------------------------------

class UdKF(KalmanFilterBase):
    """Square-root-free UD filter: MWGS time update, Bierman scalar updates.

    Measurements are whitened once per step with a Cholesky factor of R, so
    the scalar updates see uncorrelated unit-variance noise.  Requires
    R > 0.
    """

    name = "udkf"

    def _init_state(self):
        m = self.model
        pair = ud_decompose(m.pi0)
        self.u_f, self.d_f = pair.u, pair.d
        qpair = ud_decompose(m.theta)
        self.uq, self.dq = qpair.u, qpair.d
        self._setup_whitening(m.r, m.h)

    def _setup_whitening(self, r, h):
        r_sqrt = cholesky_upper(r)
        if np.any(np.diag(r_sqrt) <= 0.0):
            raise NotPositiveSemidefinite("whitening requires R > 0")
        self.w_mat = np.linalg.inv(r_sqrt.T)
        self.h_w = self.w_mat @ h
        self._logdet_r = 2.0 * float(np.sum(np.log(np.diag(r_sqrt))))

    def _state_arrays(self):
        return (self.u_f, self.d_f)

    def _cov_repr(self):
        return UdCov(self.u_f, self.d_f)

    def _time_kernel(self, u):
        f, bm, g, _h, _th, _r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            qpair = ud_decompose(self.model.matrices_at(self.k)[4])
            self.uq, self.dq = qpair.u, qpair.d
        self.x, self.u_f, self.d_f = _kernels.ud_time_step(
            self.x, self.u_f, self.d_f, f, bm, g, self.uq, self.dq, u)

    def _meas_kernel(self, z):
        _f, _bm, _g, h, _th, r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            self._setup_whitening(r, h)
        p_prior = reconstruct_covariance(self._cov_repr())
        re = h @ p_prior @ h.T + r
        e = z - h @ self.x
        zw = self.w_mat @ z
        self.x, self.u_f, self.d_f, ew, alphas = _kernels.ud_meas_step(
            self.x, self.u_f, self.d_f, self.h_w, zw)
        m = e.size
        inc = -0.5 * m * LOG_2PI - 0.5 * (
            self._logdet_r + float(np.sum(np.log(alphas)))
            + float(np.sum(ew * ew / alphas)))
        kg = p_prior @ h.T @ np.linalg.inv(re)
        return StepReport(innovation=e, innovation_cov=FullCov(re), gain=kg,
                          loglik_increment=inc)

    def _run_kernel(self, zs, us):
        m = self.model
        return _kernels.run_udkf(m.f, m.b, m.g, self.h_w, self.uq, self.dq,
                                 self.w_mat, self.x, self.u_f, self.d_f,
                                 zs, us)


# ---------------------------------------------------------------------------
# prior SVD square-root filter
# ---------------------------------------------------------------------------

class SvdSrKF(KalmanFilterBase):
    """Earlier SVD filter: inverts the diagonal singular-value roots.

    Needs Cholesky factors of Theta and R (hence R > 0), and strictly
    positive prior singular values; near-singular covariance turns the
    D^{-1/2} pre-array block into divisions by tiny numbers.  Those are
    not guarded: the resulting Inf/NaN is recorded as the failure.
    """

    name = "svd_srkf"

    def _init_state(self):
        m = self.model
        q0, d0 = svd_factor_psd(m.pi0)
        self.q, self.dsq = q0, np.sqrt(d0)
        self.th_sqrt = cholesky_upper(m.theta)
        self._setup_r(m.r)

    def _setup_r(self, r):
        r_sqrt = cholesky_upper(r)
        if np.any(np.diag(r_sqrt) <= 0.0):
            raise NotPositiveSemidefinite("SVD-SRKF requires R > 0")
        self.r_invt = np.linalg.inv(r_sqrt.T)
        self.r_inv = np.linalg.inv(r)

    def _state_arrays(self):
        return (self.q, self.dsq)

    def _cov_repr(self):
        return SvdCov(self.q, self.dsq)

    def _time_kernel(self, u):
        f, bm, g, _h, _th, _r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            self.th_sqrt = cholesky_upper(self.model.matrices_at(self.k)[4])
        self.x, self.q, self.dsq, st = _kernels.svd_srkf_time_step(
            self.x, self.q, self.dsq, f, bm, g, self.th_sqrt, u)
        if st != _kernels.OK:
            self._fail(st)

    def _meas_kernel(self, z):
        _f, _bm, _g, h, _th, r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            self._setup_r(r)
        p_prior = reconstruct_covariance(self._cov_repr())
        re = h @ p_prior @ h.T + r  # diagnostic only; not used by the filter
        self.x, self.q, self.dsq, e, kg, st = _kernels.svd_srkf_meas_step(
            self.x, self.q, self.dsq, h, self.r_invt, self.r_inv, z)
        if st != _kernels.OK:
            self._fail(st)
            return None
        return StepReport(innovation=e, innovation_cov=FullCov(re), gain=kg,
                          loglik_increment=_loglik_full(e, re))

    def _run_kernel(self, zs, us):
        m = self.model
        return _kernels.run_svd_srkf(m.f, m.b, m.g, m.h, self.th_sqrt,
                                     self.r_invt, self.r_inv, self.x,
                                     self.q, self.dsq, zs, us)


# ---------------------------------------------------------------------------
# new SVD filter (Joseph-stabilized, inversion-free in D_P)
# ---------------------------------------------------------------------------

class SvdKF(KalmanFilterBase):
    """SVD filter that never inverts the covariance singular values.

    Works for any Theta >= 0 and R >= 0 since only SVD factors of the
    noise covariances are needed.  The only inversion is of the innovation
    singular values D_Re; ``dp_reciprocal_ops`` counts reciprocals taken
    of covariance singular values and stays zero by construction.
    """

    name = "svd_kf"

    def _init_state(self):
        m = self.model
        q0, d0 = svd_factor_psd(m.pi0)
        self.q, self.dsq = q0, np.sqrt(d0)
        q_th, d_th = svd_factor_psd(m.theta)
        self.q_th, self.dsq_th = q_th, np.sqrt(d_th)
        q_r, d_r = svd_factor_psd(m.r)
        self.q_r, self.dsq_r = q_r, np.sqrt(d_r)
        self.dp_reciprocal_ops = 0

    def _state_arrays(self):
        return (self.q, self.dsq)

    def _cov_repr(self):
        return SvdCov(self.q, self.dsq)

    def _time_kernel(self, u):
        f, bm, g, _h, _th, _r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            q_th, d_th = svd_factor_psd(self.model.matrices_at(self.k)[4])
            self.q_th, self.dsq_th = q_th, np.sqrt(d_th)
        self.x, self.q, self.dsq, st = _kernels.svdkf_time_step(
            self.x, self.q, self.dsq, f, bm, g, self.q_th, self.dsq_th, u)
        if st != _kernels.OK:
            self._fail(st)

    def _meas_kernel(self, z):
        _f, _bm, _g, h, _th, _r = self.model.matrices_at(self.k)
        if not self.model.time_invariant:
            q_r, d_r = svd_factor_psd(self.model.matrices_at(self.k)[5])
            self.q_r, self.dsq_r = q_r, np.sqrt(d_r)
        (self.x, self.q, self.dsq, e, ebar, sig_re, q_re, kbar, kg,
         st) = _kernels.svdkf_meas_step(self.x, self.q, self.dsq, h,
                                        self.q_r, self.dsq_r, z)
        if st != _kernels.OK:
            self._fail(st)
            return None
        d_re = sig_re**2
        m = e.size
        inc = -0.5 * m * LOG_2PI - 0.5 * (
            float(np.sum(np.log(d_re))) + float(ebar @ (ebar / d_re)))
        return StepReport(innovation=e,
                          innovation_cov=SvdCov(q_re, sig_re),
                          gain=kg, loglik_increment=inc,
                          normalized_innovation=ebar, normalized_gain=kbar)

    def _run_kernel(self, zs, us):
        m = self.model
        return _kernels.run_svdkf(m.f, m.b, m.g, m.h, self.q_th, self.dsq_th,
                                  self.q_r, self.dsq_r, self.x, self.q,
                                  self.dsq, zs, us)


FILTERS = {
    cls.name: cls
    for cls in (ConventionalKF, CholeskySrKF, UdKF, SvdSrKF, SvdKF)
}


def make_filter(name: str, model: StateSpaceModel) -> KalmanFilterBase:
    key = name.replace("-", "_")
    if key not in FILTERS:
        raise InvalidInput(
            f"unknown filter {name!r}; choose from {sorted(FILTERS)}")
    return FILTERS[key](model)
