"""End-to-end debiased compression pipelines.

Every pipeline takes a mean-zero kernel oracle over the input points
and returns a WeightVector of the advertised kind. The greedy Stein
thinning baseline of full size is cached per oracle so that the
recombination and Cholesky pipelines can share it within a session.
"""

import math
import weakref

import numpy as np

from .cholesky import cholesky_thinning
from .greedy import stein_thinning
from .lowrank import low_rank_debias, resample_stratified
from .recombination import recombination_thinning
from .thinning import kernel_thinning, kt_compresspp
from .weights import SIMPLEX, WeightVector

_st_full_cache = weakref.WeakKeyDictionary()


def standard_thin(n, n0):
    """Indices of every s-th point, keeping the last point of each stride.

    With stride s = floor(n / n0), returns the 0-based indices
    s - 1, 2 s - 1, ..., n0 s - 1 (later iterates are preferred for
    MCMC inputs).
    """
    if not (1 <= n0 <= n):
        raise ValueError("need 1 <= n0 <= n")
    s = n // n0
    return s * np.arange(1, n0 + 1) - 1


def skt(oracle, m, delta, rng):
    """Stein kernel thinning: greedy debiasing then kernel thinning.

    Thins to n' = m 2^ceil(log2(n / m)) points greedily, then kernel
    thins the multiset down to m.

    Returns:
        Equal-multiset WeightVector of denominator m.
    """
    n = oracle.n
    if not (1 <= m <= n):
        raise ValueError("need 1 <= m <= n")
    n_prime = m
    while n_prime < n:
        n_prime *= 2
    _, w = stein_thinning(oracle, n_prime)
    return kernel_thinning(oracle, w, m, delta, rng)


def lskt(oracle, r, T, Q, g, delta, rng):
    """Low-rank Stein kernel thinning to m = sqrt(4^ceil(log4 n)) points.

    Debiases with the low-rank loop, resamples the simplex weights to
    an equal multiset of size n' = 4^ceil(log4 n), and compresses with
    the divide-and-conquer thinner (failure budget delta / 3).
    """
    n = oracle.n
    w = low_rank_debias(oracle, r, T, Q, rng)
    n_prime = 1
    while n_prime < n:
        n_prime *= 4
    w_eq = resample_stratified(w.w, n_prime, rng)
    return kt_compresspp(oracle, w_eq, g, delta / 3.0, rng)


def _st_full(oracle):
    """Session-cached Stein thinning baseline of full size n."""
    try:
        cached = _st_full_cache.get(oracle)
    except TypeError:
        cached = None
    if cached is not None:
        return cached
    _, w = stein_thinning(oracle, oracle.n)
    w = WeightVector.simplex(w.w)
    try:
        _st_full_cache[oracle] = w
    except TypeError:
        pass
    return w


def _debias(oracle, low_rank, rng):
    if low_rank is not None:
        r, T, Q = low_rank
        return low_rank_debias(oracle, r, T, Q, rng)
    return _st_full(oracle)


def stein_recombination(oracle, m, rng, low_rank=None):
    """Simplex-weighted compression to at most m points.

    Debiases with greedy thinning (or the low-rank loop when
    low_rank=(r, T, Q) is given) and compresses with recombination
    thinning.
    """
    w = _debias(oracle, low_rank, rng)
    return recombination_thinning(oracle, w, m, rng)


def stein_cholesky(oracle, m, rng, low_rank=None):
    """Constant-preserving compression to at most m points."""
    w = _debias(oracle, low_rank, rng)
    return cholesky_thinning(oracle, w, m, rng)


def full_debias_oracle(K, iters=100_000):
    """Reference simplex reweighting by long-run mirror descent.

    Minimizes w^T K w over the simplex on the dense matrix; intended as
    a test-time approximation of the optimal debiasing weights for
    n <= 4096.

    Returns:
        (n,) simplex weights.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n > 4096:
        raise ValueError("dense reference reweighting is capped at n = 4096")
    from .lowrank import amd

    try:
        from scipy.linalg.blas import dsymv

        K_f = np.asfortranarray(K)

        def matvec(z):
            return dsymv(1.0, K_f, z)
    except ImportError:  # pragma: no cover
        def matvec(z):
            return K @ z

    return amd(matvec, np.diag(K).copy(), iters, np.full(n, 1.0 / n))
