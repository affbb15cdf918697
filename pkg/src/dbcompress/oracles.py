"""Kernel oracles over index pairs, MMD and energy distance.

A KernelOracle exposes a (possibly constant-regularized) PSD kernel
matrix through entry/row/block evaluation without ever materializing it.
For a mean-zero kernel, the squared MMD of a weighted empirical measure
to the target is the quadratic form w^T K w.
"""

import numpy as np

from .kernels import _stein_block
from .weights import as_weight_array

_MMD_NEG_TOL = -1e-10


class NonPsdKernelError(RuntimeError):
    """Raised when a quadratic form comes out negative beyond round-off."""


class KernelOracle:
    """Abstract evaluator of kernel entries over index pairs.

    Subclasses implement n, base_diag() and base_block(); the optional
    constant offset c (the regularized kernel k + c) is handled here.
    """

    offset = 0.0

    @property
    def n(self):
        raise NotImplementedError

    def base_diag(self):
        raise NotImplementedError

    def base_block(self, I, J):
        raise NotImplementedError

    def diag(self):
        return self.base_diag() + self.offset

    def entry(self, i, j):
        return float(self.base_block([i], [j])[0, 0]) + self.offset

    def row(self, i):
        return self.base_block([i], np.arange(self.n))[0] + self.offset

    def row_subset(self, i, J):
        return self.base_block([i], J)[0] + self.offset

    def block(self, I, J):
        return self.base_block(I, J) + self.offset

    def with_offset(self, c):
        """A view of this oracle evaluating k + c."""
        import copy

        out = copy.copy(self)
        out.offset = self.offset + float(c)
        return out

    def halve_payload(self):
        """Primitive arrays for the compiled halving inner loop, or None."""
        return None


class SteinOracle(KernelOracle):
    """Oracle backed by a SteinKernelCache (O(d) per entry)."""

    def __init__(self, cache, offset=0.0):
        self.cache = cache
        self.offset = float(offset)

    @property
    def n(self):
        return self.cache.n

    def base_diag(self):
        return self.cache.diag.copy()

    def base_block(self, I, J):
        return _stein_block(self.cache, I, J)

    def halve_payload(self):
        c = self.cache
        family = 0 if c.base.family == "gaussian" else 1
        return (c.points, c.scores, c.whitened, c.m_scores, c.diag,
                family, c.base.sigma_sq)


class DenseOracle(KernelOracle):
    """Oracle backed by an explicit symmetric kernel matrix."""

    def __init__(self, K, offset=0.0):
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("kernel matrix must be square")
        self.K = K
        self.offset = float(offset)

    @property
    def n(self):
        return self.K.shape[0]

    def base_diag(self):
        return np.diag(self.K).copy()

    def base_block(self, I, J):
        I = np.atleast_1d(np.asarray(I, dtype=int))
        J = np.atleast_1d(np.asarray(J, dtype=int))
        return self.K[np.ix_(I, J)]


def mmd_sq(oracle, w):
    """Squared MMD w^T K w of weights w under a mean-zero kernel oracle.

    Streams kernel rows over the support of w, so the cost is at most
    O(nnz(w) * n) kernel evaluations. Tiny negative results from
    round-off are clamped to 0; anything below -1e-10 signals a non-PSD
    oracle and raises.
    """
    w = as_weight_array(w)
    if w.shape[0] != oracle.n:
        raise ValueError("weights and oracle size mismatch")
    supp = np.nonzero(w)[0]
    if supp.size == 0:
        return 0.0
    ws = w[supp]
    val = float(ws @ oracle.block(supp, supp) @ ws)
    if val < _MMD_NEG_TOL * max(1.0, float(np.abs(ws).sum() ** 2)):
        raise NonPsdKernelError(f"negative squared MMD {val!r}")
    return max(val, 0.0)


def mmd_sq_between(oracle, w, v):
    """Squared MMD between two weightings of the same points."""
    w = as_weight_array(w)
    v = as_weight_array(v)
    if w.shape != v.shape:
        raise ValueError("weight vectors must have equal length")
    return mmd_sq(oracle, w - v)


def energy_distance(x_points, w, y_points, v):
    """Energy distance between two weighted samples.

    Computes 2 sum_ij w_i v_j ||x_i - y_j|| - sum_ij w_i w_j ||x_i - x_j||
    - sum_ij v_i v_j ||y_i - y_j|| for simplex weights w, v.
    """
    x = np.atleast_2d(np.asarray(x_points, dtype=float))
    y = np.atleast_2d(np.asarray(y_points, dtype=float))
    w = as_weight_array(w)
    v = as_weight_array(v)
    for name, vec in (("w", w), ("v", v)):
        if np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} must be simplex weights")

    def pair_norms(a, b):
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    cross = w @ pair_norms(x, y) @ v
    xx = w @ pair_norms(x, x) @ w
    yy = v @ pair_norms(y, y) @ v
    val = 2.0 * cross - xx - yy
    if val < -1e-10:
        raise ValueError(f"energy distance came out negative: {val!r}")
    return max(float(val), 0.0)


def kernel_radius(oracle):
    """Largest kernel diagonal entry."""
    d = oracle.diag()
    if d.size == 0:
        raise ValueError("empty oracle")
    return float(d.max())


def point_radius(points, precond=None):
    """Largest point norm, clamped below by 1.

    Uses the Euclidean norm by default; with a preconditioner given, the
    whitened norm ||L^{-1} x|| is used instead.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("empty point set")
    if precond is not None:
        points = points @ precond.L_inv.T
    return float(max(np.linalg.norm(points, axis=1).max(), 1.0))
