"""Numeric kernels for the five filter recursions.

Everything in this module is plain-array code compiled with numba when
``SVDKF_NUMBA`` permits (see ``_dispatch``).  Diagonal matrices are passed
as 1-D vectors.  No kernel raises on numeric breakdown: divisions follow
IEEE semantics and each run kernel classifies non-finite state into a
status code so that divergence can be observed rather than prevented.

Status codes returned by the run kernels:
    0  finished, all quantities finite
    1  NaN appeared (fail step reported 1-based)
    2  Inf appeared without NaN
    3  factorization failure
"""

import numpy as np

from ._dispatch import maybe_jit

OK = 0
FAIL_NAN = 1
FAIL_INF = 2
FAIL_FACT = 3


@maybe_jit
def _finite_class(a):
    if np.isnan(a).any():
        return FAIL_NAN
    if np.isinf(a).any():
        return FAIL_INF
    return OK


@maybe_jit
def _combine(s1, s2):
    if s1 == FAIL_NAN or s2 == FAIL_NAN:
        return FAIL_NAN
    if s1 != OK:
        return s1
    return s2


# ---------------------------------------------------------------------------
# factorization kernels
# ---------------------------------------------------------------------------

@maybe_jit
def qr_pos(a):
    """Upper-triangular R with nonnegative diagonal and R'R = A'A."""
    _, r = np.linalg.qr(a)
    for i in range(r.shape[0]):
        if r[i, i] < 0.0:
            for j in range(r.shape[1]):
                r[i, j] = -r[i, j]
    return r


@maybe_jit
def chol_upper(m, tol):
    """Upper-triangular S with S'S = m, clamping semidefinite pivots.

    Pivots in [-tol, tol] are set to zero together with their column,
    so rank-deficient PSD inputs factor without error.  Returns
    (S, status); status is FAIL_FACT when a pivot falls below -tol.
    """
    n = m.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        s = m[j, j]
        for k in range(j):
            s -= low[j, k] * low[j, k]
        if s < -tol:
            return low.T.copy(), FAIL_FACT
        if s <= tol:
            low[j, j] = 0.0
        else:
            low[j, j] = np.sqrt(s)
            for i in range(j + 1, n):
                t = m[i, j]
                for k in range(j):
                    t -= low[i, k] * low[j, k]
                low[i, j] = t / low[j, j]
    return low.T.copy(), OK


@maybe_jit
def ud_decompose(m, tol):
    """Factor a symmetric PSD matrix as U d U' with unit upper U.

    Zero pivots (within tol) zero their column, tolerating rank
    deficiency.  Returns (U, d, status).
    """
    n = m.shape[0]
    u = np.eye(n)
    d = np.zeros(n)
    for j in range(n - 1, -1, -1):
        s = m[j, j]
        for k in range(j + 1, n):
            s -= d[k] * u[j, k] * u[j, k]
        if s < -tol:
            return u, d, FAIL_FACT
        if s <= tol:
            d[j] = 0.0
        else:
            d[j] = s
            for i in range(j):
                t = m[i, j]
                for k in range(j + 1, n):
                    t -= d[k] * u[i, k] * u[j, k]
                u[i, j] = t / d[j]
    return u, d, OK


@maybe_jit
def mwgs(basis, w):
    """Modified weighted Gram-Schmidt: U d U' = basis diag(w) basis'.

    basis is n x k with k >= n; w is a length-k nonnegative weight
    vector.  Zero diagonal entries are tolerated (rank deficiency).
    """
    n, kk = basis.shape
    b = basis.copy()
    u = np.eye(n)
    d = np.zeros(n)
    for j in range(n - 1, -1, -1):
        s = 0.0
        for l in range(kk):
            s += b[j, l] * b[j, l] * w[l]
        d[j] = s
        if d[j] > 0.0:
            for i in range(j):
                t = 0.0
                for l in range(kk):
                    t += b[i, l] * w[l] * b[j, l]
                t /= d[j]
                u[i, j] = t
                for l in range(kk):
                    b[i, l] -= t * b[j, l]
    return u, d


@maybe_jit
def gauss_inv(a):
    """Matrix inverse by Gauss-Jordan with partial pivoting.

    Unlike np.linalg.inv this never raises: a zero pivot produces
    inf/nan entries that propagate, which is the breakdown behavior
    the ill-conditioning sweep is designed to record.
    """
    n = a.shape[0]
    aug = np.concatenate((a.copy(), np.eye(n)), axis=1)
    for col in range(n):
        piv = col
        big = abs(aug[col, col])
        for r in range(col + 1, n):
            if abs(aug[r, col]) > big:
                big = abs(aug[r, col])
                piv = r
        if piv != col:
            for j in range(2 * n):
                tmp = aug[col, j]
                aug[col, j] = aug[piv, j]
                aug[piv, j] = tmp
        p = aug[col, col]
        for j in range(2 * n):
            aug[col, j] = aug[col, j] / p
        for r in range(n):
            if r != col:
                f = aug[r, col]
                for j in range(2 * n):
                    aug[r, j] -= f * aug[col, j]
    return aug[:, n:].copy()


@maybe_jit
def tri_solve_lower(low, b):
    """Solve low @ y = b for lower-triangular low (IEEE on zero pivots)."""
    n = b.shape[0]
    y = np.zeros(n)
    for i in range(n):
        s = b[i]
        for j in range(i):
            s -= low[i, j] * y[j]
        y[i] = s / low[i, i]
    return y


# ---------------------------------------------------------------------------
# conventional KF steps
# ---------------------------------------------------------------------------

@maybe_jit
def kf_time_step(x, p, f, bm, g, th, u):
    xp = f @ x + bm @ u
    pp = f @ p @ f.T + g @ th @ g.T
    return xp, pp


@maybe_jit
def kf_meas_step(x, p, h, r, z):
    re = h @ p @ h.T + r
    ri = gauss_inv(re)
    kg = p @ h.T @ ri
    e = z - h @ x
    xp = x + kg @ e
    n = p.shape[0]
    pp = (np.eye(n) - kg @ h) @ p
    return xp, pp, e, re, kg


# ---------------------------------------------------------------------------
# Cholesky square-root filter steps (QR array form)
# ---------------------------------------------------------------------------

@maybe_jit
def srkf_time_step(x, s, f, bm, g, th_sqrt, u):
    xp = f @ x + bm @ u
    pre = np.concatenate((s @ f.T, th_sqrt @ g.T))
    sp = qr_pos(pre)
    return xp, sp


@maybe_jit
def srkf_meas_step(x, s, h, r_sqrt, z):
    """Block pre-array update; returns (x+, S+, e, Re^{1/2}, Kbar).

    Kbar is the (m x n) block Re^{-T/2} H P; the plain gain is
    Kbar' Re^{-T/2} and is recovered by the caller when needed.
    """
    m, n = h.shape
    pre = np.zeros((m + n, m + n))
    pre[:m, :m] = r_sqrt
    pre[m:, :m] = s @ h.T
    pre[m:, m:] = s
    post = qr_pos(pre)
    re_sqrt = post[:m, :m].copy()
    kbar = post[:m, m:].copy()
    sp = post[m:, m:].copy()
    e = z - h @ x
    y = tri_solve_lower(re_sqrt.T.copy(), e)
    xp = x + kbar.T @ y
    return xp, sp, e, re_sqrt, kbar


# ---------------------------------------------------------------------------
# UD filter steps (Thornton time update, Bierman measurement update)
# ---------------------------------------------------------------------------

@maybe_jit
def ud_time_step(x, u_f, d_f, f, bm, g, uq, dq, uc):
    xp = f @ x + bm @ uc
    basis = np.concatenate((f @ u_f, g @ uq), axis=1)
    w = np.concatenate((d_f, dq))
    up, dp = mwgs(basis, w)
    return xp, up, dp


@maybe_jit
def ud_meas_step(x, u_f, d_f, h_w, z_w):
    """Sequential Bierman scalar updates on pre-whitened measurements.

    h_w and z_w must already be whitened so each scalar row carries unit
    noise variance.  Returns the whitened innovations and their variances
    alongside the updated factors.
    """
    n = x.shape[0]
    m = h_w.shape[0]
    u = u_f.copy()
    d = d_f.copy()
    xo = x.copy()
    ew = np.zeros(m)
    alphas = np.zeros(m)
    for row in range(m):
        h = h_w[row]
        a = u.T @ h
        b = d * a
        dz = z_w[row] - h @ xo
        alpha = 1.0
        gamma = 1.0
        for j in range(n):
            beta = alpha
            alpha = alpha + a[j] * b[j]
            lam = -a[j] * gamma
            gamma = 1.0 / alpha
            d[j] = beta * gamma * d[j]
            for i in range(j):
                old = u[i, j]
                u[i, j] = old + b[i] * lam
                b[i] = b[i] + b[j] * old
        xo = xo + (gamma * dz) * b
        ew[row] = dz
        alphas[row] = alpha
    return xo, u, d, ew, alphas


# ---------------------------------------------------------------------------
# prior SVD square-root filter steps
# ---------------------------------------------------------------------------

@maybe_jit
def svd_srkf_time_step(x, q, dsq, f, bm, g, th_sqrt, u):
    xp = f @ x + bm @ u
    pre = np.concatenate((np.diag(dsq) @ q.T @ f.T, th_sqrt @ g.T))
    st = _finite_class(pre)
    if st != OK:
        return xp, q, dsq, st
    _, sig, vt = np.linalg.svd(pre, False)
    return xp, vt.T.copy(), sig, OK


@maybe_jit
def svd_srkf_meas_step(x, q, dsq, h, r_invt, r_inv, z):
    """Measurement update inverting the prior singular-value roots.

    The 1/dsq term is the known weak point of this variant: near-singular
    prior covariance turns it into division by tiny numbers.
    """
    m = h.shape[0]
    n = q.shape[0]
    dinv = 1.0 / dsq
    pre = np.concatenate((r_invt @ h @ q, np.diag(dinv)))
    st = _finite_class(pre)
    if st != OK:
        return x, q, dsq, np.zeros(m), np.zeros((n, m)), st
    _, sig, vt = np.linalg.svd(pre, False)
    dsqp = 1.0 / sig
    qp = q @ vt.T
    p_post = (qp * (dsqp * dsqp)) @ qp.T
    kg = p_post @ h.T @ r_inv
    e = z - h @ x
    xp = x + kg @ e
    return xp, qp, dsqp, e, kg, OK


# ---------------------------------------------------------------------------
# new SVD filter steps (Joseph-stabilized, inversion-free in D_P)
# ---------------------------------------------------------------------------

@maybe_jit
def svdkf_time_step(x, q, dsq, f, bm, g, q_th, dsq_th, u):
    xp = f @ x + bm @ u
    pre = np.concatenate((np.diag(dsq) @ q.T @ f.T,
                          np.diag(dsq_th) @ q_th.T @ g.T))
    st = _finite_class(pre)
    if st != OK:
        return xp, q, dsq, st
    _, sig, vt = np.linalg.svd(pre, False)
    return xp, vt.T.copy(), sig, OK


@maybe_jit
def svdkf_meas_step(x, q, dsq, h, q_r, dsq_r, z):
    """Three-array measurement update; never inverts entries of dsq.

    Returns (x+, Q+, dsq+, e, ebar, Re sigma roots, Q_Re, Kbar, K, status).
    """
    m = h.shape[0]
    n = q.shape[0]
    pre1 = np.concatenate((np.diag(dsq_r) @ q_r.T,
                           np.diag(dsq) @ q.T @ h.T))
    st = _finite_class(pre1)
    if st != OK:
        z0 = np.zeros(m)
        return (x, q, dsq, z0, z0, z0, np.eye(m), np.zeros((n, m)),
                np.zeros((n, m)), st)
    _, sig_re, vt_re = np.linalg.svd(pre1, False)
    q_re = vt_re.T.copy()
    d_re = sig_re * sig_re
    p_prior = (q * (dsq * dsq)) @ q.T
    kbar = p_prior @ h.T @ q_re
    kg = (kbar / d_re) @ q_re.T
    pre2 = np.concatenate((np.diag(dsq) @ q.T @ (np.eye(n) - kg @ h).T,
                           np.diag(dsq_r) @ q_r.T @ kg.T))
    st = _finite_class(pre2)
    if st != OK:
        z0 = np.zeros(m)
        return x, q, dsq, z0, z0, sig_re, q_re, kbar, kg, st
    _, sig_p, vt_p = np.linalg.svd(pre2, False)
    e = z - h @ x
    ebar = q_re.T @ e
    xp = x + kbar @ (ebar / d_re)
    return xp, vt_p.T.copy(), sig_p, e, ebar, sig_re, q_re, kbar, kg, OK


# ---------------------------------------------------------------------------
# run-level kernels: one full filter pass over a trajectory
# ---------------------------------------------------------------------------

@maybe_jit
def run_kf(f, bm, g, h, th, r, x0, p0, zs, us):
    kk = zs.shape[0]
    n = f.shape[0]
    est = np.full((kk, n), np.nan)
    x = x0.copy()
    p = p0.copy()
    for k in range(kk):
        x, p = kf_time_step(x, p, f, bm, g, th, us[k])
        x, p, _, _, _ = kf_meas_step(x, p, h, r, zs[k])
        st = _combine(_finite_class(x), _finite_class(p))
        if st != OK:
            return est, st, k + 1
        est[k] = x
    return est, OK, 0


@maybe_jit
def run_srkf(f, bm, g, h, th_sqrt, r_sqrt, x0, s0, zs, us):
    kk = zs.shape[0]
    n = f.shape[0]
    est = np.full((kk, n), np.nan)
    x = x0.copy()
    s = s0.copy()
    for k in range(kk):
        x, s = srkf_time_step(x, s, f, bm, g, th_sqrt, us[k])
        x, s, _, _, _ = srkf_meas_step(x, s, h, r_sqrt, zs[k])
        st = _combine(_finite_class(x), _finite_class(s))
        if st != OK:
            return est, st, k + 1
        est[k] = x
    return est, OK, 0


@maybe_jit
def run_udkf(f, bm, g, h_w, uq, dq, w_mat, x0, u0, d0, zs, us):
    kk = zs.shape[0]
    n = f.shape[0]
    est = np.full((kk, n), np.nan)
    x = x0.copy()
    u = u0.copy()
    d = d0.copy()
    for k in range(kk):
        x, u, d = ud_time_step(x, u, d, f, bm, g, uq, dq, us[k])
        zw = w_mat @ zs[k]
        x, u, d, _, _ = ud_meas_step(x, u, d, h_w, zw)
        st = _combine(_finite_class(x),
                      _combine(_finite_class(u), _finite_class(d)))
        if st != OK:
            return est, st, k + 1
        est[k] = x
    return est, OK, 0


@maybe_jit
def run_svd_srkf(f, bm, g, h, th_sqrt, r_invt, r_inv, x0, q0, dsq0, zs, us):
    kk = zs.shape[0]
    n = f.shape[0]
    est = np.full((kk, n), np.nan)
    x = x0.copy()
    q = q0.copy()
    dsq = dsq0.copy()
    for k in range(kk):
        x, q, dsq, st = svd_srkf_time_step(x, q, dsq, f, bm, g, th_sqrt,
                                           us[k])
        if st != OK:
            return est, st, k + 1
        x, q, dsq, _, _, st = svd_srkf_meas_step(x, q, dsq, h, r_invt,
                                                 r_inv, zs[k])
        if st != OK:
            return est, st, k + 1
        st = _combine(_finite_class(x),
                      _combine(_finite_class(q), _finite_class(dsq)))
        if st != OK:
            return est, st, k + 1
        est[k] = x
    return est, OK, 0


@maybe_jit
def run_svdkf(f, bm, g, h, q_th, dsq_th, q_r, dsq_r, x0, q0, dsq0, zs, us):
    kk = zs.shape[0]
    n = f.shape[0]
    est = np.full((kk, n), np.nan)
    x = x0.copy()
    q = q0.copy()
    dsq = dsq0.copy()
    for k in range(kk):
        x, q, dsq, st = svdkf_time_step(x, q, dsq, f, bm, g, q_th, dsq_th,
                                        us[k])
        if st != OK:
            return est, st, k + 1
        x, q, dsq, _, _, _, _, _, _, st = svdkf_meas_step(x, q, dsq, h, q_r,
                                                          dsq_r, zs[k])
        if st != OK:
            return est, st, k + 1
        st = _combine(_finite_class(x),
                      _combine(_finite_class(q), _finite_class(dsq)))
        if st != OK:
            return est, st, k + 1
        est[k] = x
    return est, OK, 0
