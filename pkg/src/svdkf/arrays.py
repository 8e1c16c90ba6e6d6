"""Factorization kernels shared by the filter implementations.

All operations are pure functions on immutable inputs.  Tolerances follow
the package-wide defaults: reconstruction and orthogonality checks at
1e-10 relative, symmetry at 1e-12 * ||M||, PSD pivot clamping at
1e-12 * max diagonal.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import FactorizationFailure, InvalidInput, NotPositiveSemidefinite

TAU_ORTH = 1e-10
TAU_RECON = 1e-10
TAU_SYM = 1e-12
TAU_PSD = 1e-12


@dataclass(frozen=True)
class SvdPostArray:
    """SVD factors of a pre-array A = w @ [diag(sigma_sqrt); 0] @ v.T."""

    w: np.ndarray
    sigma_sqrt: np.ndarray  # 1-D, descending, nonnegative
    v: np.ndarray

    def reconstruct_gram(self) -> np.ndarray:
        """Return v @ diag(sigma_sqrt**2) @ v.T (equals A'A)."""
        return (self.v * self.sigma_sqrt**2) @ self.v.T


@dataclass(frozen=True)
class UdPair:
    """Unit upper-triangular u and nonnegative diagonal d with P = u d u'."""

    u: np.ndarray
    d: np.ndarray  # 1-D

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.d) @ self.u.T


def _as_pre_array(pre) -> np.ndarray:
    a = np.asarray(pre, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInput(f"pre-array must be 2-D, got shape {a.shape}")
    if a.shape[0] < a.shape[1]:
        raise InvalidInput(f"pre-array needs rows >= cols, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("pre-array contains non-finite entries")
    return a


def _psd_scale(a: np.ndarray) -> float:
    """Scale for the PSD pivot tolerance: the largest diagonal entry.

    Must stay relative to the matrix itself (no absolute floor), otherwise
    legitimately tiny covariances like R = delta^2 I would clamp to zero.
    """
    top = float(np.max(np.abs(np.diag(a)))) if a.size else 0.0
    return top if top > 0.0 else 1.0


def _check_symmetric(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.linalg.norm(a, np.inf), 1.0)
    if np.max(np.abs(a - a.T)) > TAU_SYM * scale:
        raise InvalidInput("matrix is not symmetric within tolerance")
    return a


def svd_array_update(pre) -> SvdPostArray:
    """Decompose a pre-array A into its post-array SVD factors.

    Returns (w, sigma_sqrt, v) with A = w [diag(sigma_sqrt); 0] v.T and
    v diag(sigma_sqrt)^2 v.T = A'A.  Singular values come out descending;
    factors are not sign-canonicalized, so compare reconstructions, not
    raw factors.
    """
    a = _as_pre_array(pre)
    try:
        w, sig, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure(f"SVD backend failed: {exc}") from exc
    return SvdPostArray(w=w, sigma_sqrt=sig, v=vt.T)


def cholesky_upper(m) -> np.ndarray:
    """Upper-triangular S with S'S = m for symmetric PSD m.

    Pivots within the PSD tolerance clamp to zero (zeroing their row of
    the lower factor), so exactly-semidefinite inputs factor fine; any
    valid factor is acceptable since only S'S is consumed downstream.
    """
    a = _check_symmetric(m)
    tol = TAU_PSD * _psd_scale(a)
    s, status = _kernels.chol_upper(a, tol)
    if status != _kernels.OK:
        raise NotPositiveSemidefinite(
            "Cholesky pivot below the negative PSD tolerance")
    return s


def qr_triangularize(pre) -> np.ndarray:
    """Upper-triangular R with nonnegative diagonal and R'R = A'A."""
    a = _as_pre_array(pre)
    return _kernels.qr_pos(a)


def mwgs(basis, weights) -> UdPair:
    """Weighted Gram-Schmidt: UdPair with u d u' = basis diag(w) basis'."""
    b = np.asarray(basis, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim == 2:
        w = np.diag(w)
    if b.ndim != 2 or b.shape[1] < b.shape[0]:
        raise InvalidInput(
            f"basis needs at least as many columns as rows, got {b.shape}")
    if w.shape[0] != b.shape[1]:
        raise InvalidInput("weights length must match basis columns")
    if np.any(w < 0):
        raise InvalidInput("weights must be nonnegative")
    u, d = _kernels.mwgs(b, w)
    return UdPair(u=u, d=d)


def ud_decompose(m) -> UdPair:
    """UD factors of a symmetric PSD matrix (rank deficiency tolerated)."""
    a = _check_symmetric(m)
    tol = TAU_PSD * _psd_scale(a)
    u, d, status = _kernels.ud_decompose(a, tol)
    if status != _kernels.OK:
        raise NotPositiveSemidefinite(
            "UD pivot below the negative PSD tolerance")
    return UdPair(u=u, d=d)


def svd_factor_psd(m) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal q and nonnegative 1-D d with m = q diag(d) q.T.

    Small negative eigenvalues from roundoff clamp to zero, so rank
    deficient covariances need no special casing.
    """
    a = _check_symmetric(m)
    vals, vecs = np.linalg.eigh(a)
    top = float(np.max(np.abs(vals)))
    tol = TAU_PSD * (top if top > 0.0 else 1.0)
    if np.min(vals) < -tol:
        raise NotPositiveSemidefinite(
            f"matrix has eigenvalue {np.min(vals):.3e} below -{tol:.3e}")
    vals = np.clip(vals, 0.0, None)
    order = np.argsort(vals)[::-1]
    return vecs[:, order], vals[order]
