"""Low-rank debiasing: pivoted Cholesky, mirror descent and resampling.

The debiasing loop alternates three steps: prune the current weights by
stratified residual resampling, build a weighted random pivoted
Cholesky approximation of the kernel matrix, and minimize the quadratic
MMD surrogate over the simplex with accelerated entropic mirror
descent. Each matrix-vector product against the low-rank-plus-diagonal
surrogate costs O(n r).
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import log_sum_exp
from .weights import WeightVector, as_weight_array


@dataclass
class LowRankFactor:
    """Rank-r kernel factor F with F F^T ~= K.

    Attributes:
        F: (n, r) factor (rows of zero-weight points are zero).
        pivots: index sequence of the selected pivots.
        columns_used: number of columns actually filled (< r only on
            early stop).
    """

    F: np.ndarray
    pivots: np.ndarray
    columns_used: int


def weighted_rpcholesky(oracle, w, r, rng):
    """Randomly pivoted partial Cholesky of the reweighted kernel.

    Works on k~(i, j) = k(i, j) sqrt(w_i w_j): pivots are sampled
    proportionally to the clamped residual diagonal, and the final
    factor is rescaled by 1/sqrt(w_i) (zero where w_i = 0) to undo the
    weighting. Stops early once the residual trace falls below 1e-14 of
    its initial value, or when a sampled pivot has a nonpositive
    residual twice in a row.

    Args:
        oracle: KernelOracle (offsets respected).
        w: simplex weights (WeightVector or array).
        r: number of columns to attempt, r >= 1.
        rng: numpy Generator.

    Returns:
        LowRankFactor with zero-padded unused columns.
    """
    if r < 1:
        raise ValueError("rank must be at least 1")
    wv = as_weight_array(w)
    n = oracle.n
    sqrt_w = np.sqrt(wv)
    F = np.zeros((n, r))
    pivots = []
    d = oracle.diag() * wv
    d = np.maximum(d, 0.0)
    total0 = d.sum()
    cols = 0
    for i in range(r):
        total = d.sum()
        if total <= 1e-14 * total0 or total <= 0.0:
            break
        s = -1
        for _attempt in range(2):
            cand = int(rng.choice(n, p=d / d.sum()))
            col = oracle.row(cand) * sqrt_w[cand] * sqrt_w
            if cols:
                col -= F[:, :cols] @ F[cand, :cols]
            if col[cand] > 0.0:
                s = cand
                break
        if s < 0:
            break
        F[:, cols] = col / math.sqrt(col[s])
        d -= F[:, cols] ** 2
        d = np.maximum(d, 0.0)
        pivots.append(s)
        cols += 1
    with np.errstate(divide="ignore"):
        inv = np.where(sqrt_w > 0.0, 1.0 / sqrt_w, 0.0)
    F *= inv[:, None]
    return LowRankFactor(F, np.asarray(pivots, dtype=int), cols)


def amd(matvec, diag, T, w0, aggressive=False):
    """Accelerated entropic mirror descent for min_{w in simplex} w^T K w.

    The multiplicative iterate is kept in the log domain and normalized
    with logsumexp; the averaging sequence uses beta_t = 2 / (t + 1) and
    gradient scaling 2 t eta K z_t. The step size is 1 / (8 max_i K_ii),
    or 1 / (8 w0^T diag) with the aggressive flag.

    Args:
        matvec: linear map z -> K z of the (surrogate) kernel matrix.
        diag: (n,) diagonal of K.
        T: number of steps, T >= 1.
        w0: initial simplex weights.
        aggressive: use the weighted-diagonal step size.

    Returns:
        (n,) simplex weights w_T.
    """
    if T < 1:
        raise ValueError("need at least one step")
    w0 = as_weight_array(w0)
    diag = np.asarray(diag, dtype=float)
    denom = 8.0 * float(w0 @ diag) if aggressive else 8.0 * float(diag.max())
    if denom <= 0.0:
        denom = 8.0 * float(diag.max())
    if denom <= 0.0:
        return w0.copy()
    eta = 1.0 / denom

    w = w0.copy()
    with np.errstate(divide="ignore"):
        log_v = np.where(w0 > 0.0, np.log(np.maximum(w0, 1e-300)), -np.inf)
    v = w0.copy()
    for t in range(1, T + 1):
        beta = 2.0 / (t + 1.0)
        z = (1.0 - beta) * w + beta * v
        g = 2.0 * t * eta * matvec(z)
        log_v = log_v - g
        log_v -= log_sum_exp(log_v[np.isfinite(log_v)])
        v = np.exp(log_v)
        w = (1.0 - beta) * w + beta * v
    return w


def _inverse_cdf_indices(weights, u):
    """Indices min{i : u <= cumsum(weights)_i} with the last bin clamped."""
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="left")


def resample_iid(w, m, rng):
    """Multinomial resampling of simplex weights to an m-multiset."""
    wv = as_weight_array(w)
    idx = _inverse_cdf_indices(wv, rng.random(m))
    return WeightVector.from_indices(idx, wv.shape[0], m)


def _residual_parts(wv, m):
    floor_counts = np.floor(m * wv)
    r = int(round(m - floor_counts.sum()))
    if r > 0:
        eta = (m * wv - floor_counts) / r
        eta = np.maximum(eta, 0.0)
        eta /= eta.sum()
    else:
        eta = None
    return floor_counts.astype(int), r, eta


def resample_residual(w, m, rng):
    """Residual resampling: deterministic floor counts plus iid residuals."""
    wv = as_weight_array(w)
    floor_counts, r, eta = _residual_parts(wv, m)
    out = floor_counts.astype(float)
    if r > 0:
        idx = _inverse_cdf_indices(eta, rng.random(r))
        out += np.bincount(idx, minlength=wv.shape[0])
    return WeightVector.equal_multiset(out / m, m)


def resample_stratified(w, m, rng):
    """Stratified residual resampling (one residual draw per stratum).

    The j-th residual uniform is drawn from [(j-1)/r, j/r), which makes
    each stratum contribute exactly one draw.
    """
    wv = as_weight_array(w)
    floor_counts, r, eta = _residual_parts(wv, m)
    out = floor_counts.astype(float)
    if r > 0:
        u = (np.arange(r) + rng.random(r)) / r
        idx = _inverse_cdf_indices(eta, u)
        out += np.bincount(idx, minlength=wv.shape[0])
    return WeightVector.equal_multiset(out / m, m)


def resample_mmd_expectations(K, w, m):
    """Exact expected squared resampling MMDs for the three schemes.

    Returns (e_iid, e_resid, e_strat): the expectation of the squared
    MMD between the resampled m-multiset and the input weighting, for
    iid, residual and stratified residual resampling. The values obey
    e_iid >= e_resid >= e_strat.
    """
    K = np.asarray(K, dtype=float)
    wv = as_weight_array(w)
    diag = np.diag(K)
    e_iid = (float(wv @ diag) - float(wv @ K @ wv)) / m

    floor_counts, r, eta = _residual_parts(wv, m)
    del floor_counts
    if r == 0:
        return e_iid, 0.0, 0.0
    e_resid = r * (float(eta @ diag) - float(eta @ K @ eta)) / (m * m)

    # Stratum laws: within-stratum index distribution from the eta CDF.
    cdf = np.concatenate(([0.0], np.cumsum(eta)))
    cdf[-1] = 1.0
    cross = 0.0
    for j in range(r):
        lo, hi = j / r, (j + 1) / r
        overlap = np.minimum(cdf[1:], hi) - np.maximum(cdf[:-1], lo)
        p = np.maximum(overlap, 0.0) * r
        cross += float(p @ K @ p)
    e_strat = (r * float(eta @ diag) - cross) / (m * m)
    return e_iid, e_resid, e_strat


def low_rank_debias(oracle, r, T, Q, rng):
    """Adaptive low-rank debiasing of the input points.

    Each round resamples the previous weights, refits a weighted
    pivoted Cholesky factor, minimizes the low-rank-plus-diagonal
    surrogate with mirror descent, and keeps the mirror-descent iterate
    only if it improves the surrogate objective.

    Args:
        oracle: mean-zero KernelOracle.
        r: approximation rank, r <= n.
        T: mirror descent steps per round.
        Q: number of adaptive rounds.
        rng: numpy Generator.

    Returns:
        Simplex WeightVector.
    """
    n = oracle.n
    if not (1 <= r <= n):
        raise ValueError("rank must satisfy 1 <= r <= n")
    if T < 1 or Q < 1:
        raise ValueError("T and Q must be positive")
    diag = oracle.diag()
    w = np.full(n, 1.0 / n)
    for q in range(1, Q + 1):
        w_tilde = resample_stratified(w, n, rng).w
        factor = weighted_rpcholesky(oracle, w_tilde, r, rng)
        F = factor.F[:, :factor.columns_used]
        resid = diag - np.einsum("ij,ij->i", F, F)

        def matvec(z, F=F, resid=resid):
            return F @ (F.T @ z) + resid * z

        w_new = amd(matvec, diag, T, w_tilde, aggressive=q > 1)
        if float(w_new @ matvec(w_new)) > float(w_tilde @ matvec(w_tilde)):
            w_new = w_tilde
        w = w_new
    return WeightVector.simplex(w)
