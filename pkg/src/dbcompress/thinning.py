"""Self-balancing halving, kernel thinning and divide-and-conquer wrappers.

The halving step walks consecutive pairs of the input, assigning one
point of each pair to the left output and one to the right so the two
halves track each other in the kernel's RKHS. Recursion over halvings
(kt_split) plus a swap-based polish yields kernel thinning; a
divide-and-conquer wrapper brings the cost down to near-linear for
large inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _halve_fast
from .greedy import kt_swap
from .weights import EQUAL, WeightVector

# Below this size the numpy reference loop is cheaper than paying the
# compiled kernel's dispatch cost.
_FAST_MIN = 1024


@dataclass
class HalveOutcome:
    """Result of one halving round.

    Attributes:
        left, right: index sequences of equal length partitioning the
            input multiset.
        signs: +/-1 per consecutive input pair (+1 sends the first
            element of the pair left).
        sigma_sq_final: final value of the adaptive threshold statistic.
    """

    left: np.ndarray
    right: np.ndarray
    signs: np.ndarray
    sigma_sq_final: float


def _halve_reference(oracle, idx, log_term, uniforms):
    """Numpy reference implementation of the halving recurrence."""
    n_loc = idx.shape[0]
    pairs = n_loc // 2
    diag = oracle.diag()
    fvals = np.zeros(n_loc)
    signs = np.empty(pairs, dtype=np.int8)
    sig_sq = 0.0
    for t in range(pairs):
        i, j = idx[2 * t], idx[2 * t + 1]
        b_sq = diag[i] + diag[j] - 2.0 * oracle.entry(i, j)
        b_sq = max(b_sq, 0.0)
        if sig_sq > 0.0:
            a = max(math.sqrt(b_sq * sig_sq * log_term), b_sq)
        else:
            a = b_sq
        alpha = fvals[2 * t] - fvals[2 * t + 1]
        if a > 0.0:
            p_plus = min(max(0.5 * (1.0 - alpha / a), 0.0), 1.0)
        else:
            p_plus = 0.5
        eta = 1.0 if uniforms[t] < p_plus else -1.0
        signs[t] = eta
        if sig_sq > 0.0:
            upd = 1.0 + (b_sq - 2.0 * a) * b_sq / sig_sq
            if upd > 0.0:
                sig_sq += b_sq * upd
        else:
            sig_sq = b_sq
        future = idx[2 * t + 2:]
        if future.size:
            fvals[2 * t + 2:] += eta * (
                oracle.row_subset(i, future) - oracle.row_subset(j, future)
            )
    return signs, sig_sq


def halve(oracle, indices, delta_pair, rng):
    """Split an even-length index sequence into two balanced halves.

    Consecutive pairs (y, y') are assigned one point per side; the sign
    probability is 1/2 shifted by the running RKHS discrepancy of the
    two halves, with an adaptive threshold controlled by the per-pair
    failure probability delta_pair.

    Args:
        oracle: mean-zero KernelOracle.
        indices: even-length int sequence (repeats allowed).
        delta_pair: per-pair failure probability in (0, 1).
        rng: numpy Generator.

    Returns:
        HalveOutcome; left and right unite to the input multiset.
    """
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    if idx.ndim != 1 or idx.size % 2 != 0:
        raise ValueError("halve needs an even-length index sequence")
    if not (0.0 < delta_pair < 1.0):
        raise ValueError("delta_pair must lie in (0, 1)")
    pairs = idx.size // 2
    uniforms = rng.random(pairs)
    log_term = 2.0 * math.log(2.0 / delta_pair)

    payload = oracle.halve_payload() if idx.size >= _FAST_MIN else None
    if payload is not None and _halve_fast.HAVE_NUMBA and oracle.offset == 0.0:
        points, scores, whitened, m_scores, diag, family, sigma_sq = payload
        signs, sig_sq = _halve_fast.halve_stein_inner(
            points, scores, whitened, m_scores, diag,
            family, sigma_sq, idx, log_term, uniforms)
    else:
        signs, sig_sq = _halve_reference(oracle, idx, log_term, uniforms)

    first = idx[0::2]
    second = idx[1::2]
    plus = signs > 0
    left = np.where(plus, first, second)
    right = np.where(plus, second, first)
    return HalveOutcome(left, right, signs, float(sig_sq))


def kt_split(oracle, indices, t, delta_pair, rng):
    """Recursive halving tree of depth t.

    Every level re-halves each child independently with a fresh rng
    substream; the union of the 2^t leaves is the input multiset.

    Returns:
        List of 2^t index arrays, each of size len(indices) / 2^t.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if t < 0:
        raise ValueError("depth must be nonnegative")
    if indices.size % (2 ** t) != 0:
        raise ValueError("input size must be divisible by 2^t")
    if t == 0:
        return [indices.copy()]
    out = halve(oracle, indices, delta_pair, rng)
    left_rng, right_rng = rng.spawn(2)
    return (kt_split(oracle, out.left, t - 1, delta_pair, left_rng)
            + kt_split(oracle, out.right, t - 1, delta_pair, right_rng))


def kernel_thinning(oracle, w, m, delta, rng):
    """Compress an equal-weighted multiset of size n' down to m points.

    Splits the expanded sequence into n'/m balanced coresets of size m
    (requires n'/m to be a power of two) and polishes the candidates
    with swap refinement; per-pair failure probability is delta / n'.

    Args:
        oracle: mean-zero KernelOracle.
        w: equal-multiset WeightVector of denominator n'.
        m: output size.
        delta: failure probability, split uniformly over pairs.
        rng: numpy Generator.

    Returns:
        Equal-multiset WeightVector of denominator m.
    """
    if w.kind != EQUAL:
        raise ValueError("kernel thinning needs equal-multiset input weights")
    n_prime = w.denom
    ratio = n_prime / m
    t = int(round(math.log2(ratio)))
    if m < 1 or 2 ** t != ratio:
        raise ValueError("n'/m must be a power of two")
    seq = w.to_indices()
    leaves = kt_split(oracle, seq, t, delta / n_prime, rng)
    best = kt_swap(oracle, leaves, m)
    return WeightVector.from_indices(best, oracle.n, m)


def _compress_delta(n_root, g, delta):
    """Per-pair failure probability schedule for the compress recursion."""
    beta = math.log2(n_root / 4 ** g)
    denom = 4.0 * n_root * 2 ** g * (g + (beta + 1.0) * 2 ** g)

    def schedule(halve_size):
        return delta * halve_size * halve_size / denom

    return schedule


def compress(oracle, indices, g, delta_schedule, rng):
    """Divide-and-conquer compression of 4^a points to 2^g * sqrt(count).

    Recurses on the four consecutive quarters, concatenates the results
    and halves once more; the halving is symmetrized by returning either
    the output half or its complement with equal probability.

    Args:
        oracle: mean-zero KernelOracle.
        indices: index sequence of length a power of 4, at least 4^g.
        g: oversampling parameter.
        delta_schedule: callable mapping a halve input size to its
            per-pair failure probability.
        rng: numpy Generator.

    Returns:
        Sub-multiset of the input of size 2^g * sqrt(len(indices)).
    """
    indices = np.asarray(indices, dtype=np.int64)
    n_in = indices.size
    a = int(round(math.log(n_in, 4)))
    if 4 ** a != n_in:
        raise ValueError("input size must be a power of 4")
    if 4 ** g > n_in:
        raise ValueError("input must hold at least 4^g points")
    if n_in == 4 ** g:
        return indices.copy()
    q = n_in // 4
    rngs = rng.spawn(5)
    parts = [compress(oracle, indices[k * q:(k + 1) * q], g, delta_schedule,
                      rngs[k]) for k in range(4)]
    cat = np.concatenate(parts)
    out = halve(oracle, cat, delta_schedule(cat.size), rngs[4])
    take_left = rngs[4].random() < 0.5
    return out.left if take_left else out.right


def _compresspp_g_range(n_prime):
    lo = math.ceil(math.log2(math.log(n_prime + 1)) + 3.1)
    hi = math.log(math.sqrt(n_prime) / math.log(n_prime), 4)
    return lo, hi


def kt_compresspp(oracle, w, g, delta, rng):
    """Near-linear-time thinning of an equal-weighted multiset to sqrt(n').

    Runs the compress recursion to 2^g sqrt(n') points, splits those
    into 2^g candidate coresets and polishes with swap refinement. The
    oversampling parameter is clamped into its admissible range; when
    that range is empty (always the case at small scales) the method
    falls back to plain kernel thinning.

    Args:
        oracle: mean-zero KernelOracle.
        w: equal-multiset WeightVector with denominator n', a power of 4.
        g: requested oversampling parameter.
        delta: total failure probability.
        rng: numpy Generator.

    Returns:
        Equal-multiset WeightVector of denominator sqrt(n').
    """
    if w.kind != EQUAL:
        raise ValueError("compress++ needs equal-multiset input weights")
    n_prime = w.denom
    a = int(round(math.log(n_prime, 4)))
    if 4 ** a != n_prime:
        raise ValueError("n' must be a power of 4")
    m = int(round(math.sqrt(n_prime)))
    lo, hi = _compresspp_g_range(n_prime)
    if lo > hi:
        return kernel_thinning(oracle, w, m, delta, rng)
    g_eff = int(min(max(g, lo), math.floor(hi)))
    if 4 ** g_eff > n_prime:
        return kernel_thinning(oracle, w, m, delta, rng)
    return _compresspp_run(oracle, w, g_eff, delta, rng)


def _compresspp_run(oracle, w, g, delta, rng):
    """Compress stage + thin stage + swap, for a feasible g."""
    n_prime = w.denom
    m = int(round(math.sqrt(n_prime)))
    seq = w.to_indices()
    rng_c, rng_t = rng.spawn(2)
    schedule = _compress_delta(n_prime, g, delta)
    mid = compress(oracle, seq, g, schedule, rng_c)
    beta = math.log2(n_prime / 4 ** g)
    gamma_thin = g / (g + (beta + 1.0) * 2 ** g)
    leaves = kt_split(oracle, mid, g, gamma_thin * delta / mid.size, rng_t)
    best = kt_swap(oracle, leaves, m)
    return WeightVector.from_indices(best, oracle.n, m)
