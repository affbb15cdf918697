"""Small dense linear algebra helpers: SPD solves, null spaces, logsumexp."""

import numpy as np
import scipy.linalg
from scipy.special import logsumexp as _scipy_logsumexp


class NumericalError(RuntimeError):
    """A numerical procedure failed (e.g. jitter cap exceeded)."""


def spd_cholesky(A, jitter_start=0.0):
    """Lower Cholesky factor of A, escalating a diagonal jitter on failure.

    The jitter starts at max(jitter_start, 1e-10 * mean(diag)) once the
    plain factorization fails and grows by 10x per attempt, capped at
    1e-4 * mean(diag).

    Returns:
        L with L L^T = A + jitter * I.

    Raises:
        NumericalError: the cap is exceeded ("not positive definite").
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = float(np.mean(np.diag(A)))
    if scale <= 0:
        scale = max(float(np.max(np.abs(A))), 1.0)
    jitter = float(jitter_start)
    cap = 1e-4 * scale
    n = A.shape[0]
    while True:
        try:
            return np.linalg.cholesky(A + jitter * np.eye(n) if jitter > 0 else A)
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = max(jitter_start, 1e-10 * scale)
            else:
                jitter *= 10.0
            if jitter > cap:
                raise NumericalError("not positive definite") from None


def spd_solve(L, b):
    """Solve (L L^T) x = b given the lower factor L."""
    L = np.asarray(L, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(np.diag(L) == 0):
        raise NumericalError("zero pivot in triangular solve")
    y = scipy.linalg.solve_triangular(L, b, lower=True)
    return scipy.linalg.solve_triangular(L.T, y, lower=False)


def svd_null_rows(A, tol_rel=1e-10):
    """Orthonormal rows spanning the null space of A.

    Singular directions with singular value <= tol_rel * s_max count as
    null. Returns a (k - rank, k) array (possibly empty).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, k = A.shape
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    if s.size == 0:
        rank = 0
    else:
        rank = int(np.sum(s > tol_rel * s[0]))
    return vt[rank:]


def log_sum_exp(v):
    """Overflow-safe log(sum(exp(v)))."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("log_sum_exp of an empty vector")
    return float(_scipy_logsumexp(v))
