"""Measure reduction by basic feasible solutions and recombination thinning.

Recombination reduces a nonnegative vector to at most m atoms while
exactly preserving m linear moments, by repeatedly walking along null
directions of the moment matrix until coordinates hit zero. Pairing it
with a low-rank factor of the kernel matrix yields a simplex-weighted
coreset whose kernel moments match the input.
"""

import numpy as np

from .greedy import kt_swap_ls
from .linalg import NumericalError, spd_cholesky, spd_solve, svd_null_rows
from .lowrank import amd, resample_stratified, weighted_rpcholesky
from .weights import SIMPLEX, WeightVector

_POS_EPS = 1e-12


def find_bfs(A, x0):
    """Reduce x0 to a basic feasible solution of A x = A x0, x >= 0.

    Requires one strictly positive row in A (so every null vector has a
    positive coordinate). Each null-space direction v moves x by
    -(x_k / v_k) v for k = argmin_{j: v_j > eps ||v||_inf} x_j / v_j,
    zeroing coordinate k; k is then eliminated from the remaining null
    vectors.

    Returns:
        x >= 0 with A x = A x0 and at most rank(A) <= m nonzeros.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x < 0):
        raise ValueError("x0 must be nonnegative")
    if A.shape[1] != x.shape[0]:
        raise ValueError("A and x0 are not conformable")
    V = svd_null_rows(A).copy()
    eliminated = np.zeros(x.shape[0], dtype=bool)
    for i in range(V.shape[0]):
        v = V[i]
        vmax = np.abs(v).max()
        pos = v > _POS_EPS * vmax
        if not np.any(pos):
            raise ValueError(
                "null vector with no positive coordinate; "
                "A needs an all-positive row")
        ratios = np.full(v.shape[0], np.inf)
        ratios[pos] = x[pos] / v[pos]
        k = int(np.argmin(ratios))
        x = x - (x[k] / v[k]) * v
        # Eliminated coordinates stay exactly zero; round-off from later
        # updates must not resurrect them (or dip survivors below zero).
        eliminated[k] = True
        x[eliminated] = 0.0
        x = np.maximum(x, 0.0)
        if i + 1 < V.shape[0]:
            V[i + 1:] -= np.outer(V[i + 1:, k] / v[k], v)
    return x


def recombination(A, x0):
    """Sparsify x0 to at most m = rows(A) atoms preserving A x = A x0.

    Processes the support in contiguous blocks of 2m aggregated columns
    so each pass halves the support, then finishes with one direct
    basic-feasible-solution step.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m = A.shape[0]
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x < 0):
        raise ValueError("x0 must be nonnegative")

    while np.count_nonzero(x) > 2 * m:
        supp = np.nonzero(x)[0]
        blocks = np.array_split(supp, 2 * m)
        blocks = [b for b in blocks if b.size]
        A_hat = np.stack([A[:, b] @ x[b] for b in blocks], axis=1)
        x_hat = find_bfs(A_hat, np.ones(len(blocks)))
        for b, scale in zip(blocks, x_hat):
            x[b] = x[b] * scale if scale > 0 else 0.0
    if np.count_nonzero(x) >= m + 1:
        supp = np.nonzero(x)[0]
        x[supp] = find_bfs(A[:, supp], x[supp])
    return x


def simplex_qp(K_small, w0=None, max_iter=None, tol=None):
    """Minimize w^T K w over the simplex for a small PSD matrix.

    Runs entropic mirror descent, detects the active support, and
    polishes with the equality-constrained KKT solution on that support
    when it is feasible and improves the objective. Never returns a
    worse objective than the warm start.

    Args:
        K_small: (q, q) PSD matrix.
        w0: optional warm start (defaults to uniform).
        max_iter: mirror descent steps (default max(500 q, 5000)).
        tol: unused slack, kept at 1e-8 * max diag.

    Returns:
        (q,) simplex weights.
    """
    K = np.atleast_2d(np.asarray(K_small, dtype=float))
    q = K.shape[0]
    if q == 1:
        return np.ones(1)
    if max_iter is None:
        max_iter = max(500 * q, 5000)
    diag = np.diag(K)
    if tol is None:
        tol = 1e-8 * float(diag.max())
    start = np.full(q, 1.0 / q) if w0 is None else np.asarray(w0, dtype=float)

    def objective(w):
        return float(w @ K @ w)

    candidates = [start]
    w_md = amd(lambda z: K @ z, diag, max_iter, start)
    candidates.append(w_md)
    supp = np.nonzero(w_md > 1e-10)[0]
    if supp.size:
        try:
            L = spd_cholesky(K[np.ix_(supp, supp)])
            y = spd_solve(L, np.ones(supp.size))
            total = y.sum()
            if total > 0:
                w_kkt = np.zeros(q)
                w_kkt[supp] = y / total
                if np.all(w_kkt >= 0):
                    candidates.append(w_kkt)
        except NumericalError:
            pass
    vals = [objective(c) for c in candidates]
    return candidates[int(np.argmin(vals))]


def recombination_thinning(oracle, w, m, rng):
    """Compress simplex weights to at most m atoms with small excess MMD.

    Resamples to prune tiny weights, extracts m - 1 kernel test vectors
    with weighted pivoted Cholesky, recombines to a sparse simplex
    vector matching those moments exactly, then polishes support and
    weights with swap line search and a small simplex QP.

    Args:
        oracle: mean-zero KernelOracle.
        w: simplex WeightVector.
        m: output sparsity target, m >= 2.
        rng: numpy Generator.

    Returns:
        Simplex WeightVector with at most m nonzeros.
    """
    if m < 2:
        raise ValueError("output size must be at least 2")
    n = oracle.n
    w_tilde = resample_stratified(w.w if isinstance(w, WeightVector) else w,
                                  n, rng).w
    factor = weighted_rpcholesky(oracle, w_tilde, m - 1, rng)
    A = np.vstack([factor.F.T, np.ones((1, n))])
    w_prime = recombination(A, w_tilde)
    w_prime = w_prime / w_prime.sum()
    refined = kt_swap_ls(oracle, WeightVector.simplex(w_prime), "splx")
    supp = refined.support()
    w_out = refined.w.copy()
    if supp.size >= 1:
        best = simplex_qp(oracle.block(supp, supp), w0=refined.w[supp])
        w_out = np.zeros(n)
        w_out[supp] = best
    return WeightVector(w_out, SIMPLEX)
