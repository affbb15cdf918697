"""Constant-preserving compression via constant-regularized pivot selection."""

import numpy as np

from .greedy import kt_swap_ls
from .linalg import spd_cholesky, spd_solve
from .lowrank import weighted_rpcholesky
from .weights import CP, WeightVector


def cp_optimal_weights(K_sub):
    """Optimal sum-to-one weights K^{-1} 1 / (1^T K^{-1} 1) on a support.

    Minimizes w^T K w subject only to sum(w) = 1; negative entries are
    allowed. Solves through the escalating-jitter Cholesky since kernel
    submatrices are often badly conditioned.
    """
    K = np.atleast_2d(np.asarray(K_sub, dtype=float))
    L = spd_cholesky(K)
    y = spd_solve(L, np.ones(K.shape[0]))
    return y / y.sum()


def cholesky_thinning(oracle, w, m, rng):
    """Compress to at most m constant-preserving weighted points.

    Selects pivots by weighted pivoted Cholesky on the
    constant-regularized kernel k + c, where c averages the m largest
    kernel diagonal entries, assigns optimal sum-to-one weights on the
    pivots (using the unregularized kernel), refines with swap line
    search in constant-preserving mode, and reweights the surviving
    support. The objective w^T K w never increases across the last
    three stages.

    Args:
        oracle: mean-zero KernelOracle.
        w: simplex WeightVector guiding the pivot sampling.
        m: output sparsity target, m >= 1.
        rng: numpy Generator.

    Returns:
        Constant-preserving WeightVector with at most m nonzeros.
    """
    if m < 1:
        raise ValueError("output size must be at least 1")
    n = oracle.n
    diag = oracle.diag()
    largest = np.sort(diag)[-min(m, n):]
    c = float(largest.mean())

    factor = weighted_rpcholesky(oracle.with_offset(c), w, m, rng)
    pivots = factor.pivots
    if pivots.size == 0:
        pivots = np.array([int(np.argmin(diag))])

    def quad(vec):
        supp = np.nonzero(vec)[0]
        return float(vec[supp] @ oracle.block(supp, supp) @ vec[supp])

    w_cur = np.zeros(n)
    w_cur[pivots] = cp_optimal_weights(oracle.block(pivots, pivots))

    refined = kt_swap_ls(oracle, WeightVector(w_cur, CP), CP)
    w_cur = refined.w

    supp = np.nonzero(w_cur)[0]
    if supp.size:
        w_new = np.zeros(n)
        w_new[supp] = cp_optimal_weights(oracle.block(supp, supp))
        # Jitter in the solve can lose to the incumbent; keep the better.
        if quad(w_new) <= quad(w_cur):
            w_cur = w_new
    return WeightVector(w_cur, CP)
