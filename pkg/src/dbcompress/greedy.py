"""Greedy coreset construction and refinement.

Stein thinning greedily grows an equal-weighted coreset minimizing the
squared MMD to the target; both it and the swap refinements below
maintain sufficient statistics so that each round costs O(n) kernel
evaluations instead of O(n m).
"""

import numpy as np

from .weights import CP, EQUAL, SIMPLEX, WeightVector


def stein_thinning(oracle, m, return_state=False):
    """Greedy equal-weighted thinning to m points (repeats allowed).

    The first point is the diagonal argmin; round t then picks
    argmin_i { t * g_i + K_ii } for the running statistic g = 2 K w.
    Ties always break to the lowest index.

    Args:
        oracle: mean-zero KernelOracle.
        m: output multiset size, m >= 1.
        return_state: also return the final g vector.

    Returns:
        (indices, weights): the length-m selection sequence and the
        corresponding equal-multiset WeightVector.
    """
    if m < 1:
        raise ValueError("output size must be at least 1")
    n = oracle.n
    diag = oracle.diag()
    idx = np.empty(m, dtype=int)
    j = int(np.argmin(diag))
    idx[0] = j
    g = 2.0 * oracle.row(j)
    for t in range(1, m):
        j = int(np.argmin(t * g + diag))
        idx[t] = j
        g *= t / (t + 1.0)
        g += (2.0 / (t + 1.0)) * oracle.row(j)
    weights = WeightVector.from_indices(idx, n, m)
    if return_state:
        return idx, weights, g
    return idx, weights


def _coreset_mmd_sq(oracle, indices):
    m = len(indices)
    uniq, counts = np.unique(indices, return_counts=True)
    ws = counts / m
    return float(ws @ oracle.block(uniq, uniq) @ ws)


def _sum_rows(oracle, indices):
    """Sum of kernel rows over a multiset of indices."""
    uniq, counts = np.unique(indices, return_counts=True)
    return counts.astype(float) @ oracle.block(uniq, np.arange(oracle.n))


def kt_swap(oracle, candidates, m):
    """Refine candidate coresets by greedy single-point swaps.

    Shortlists the best-MMD candidate together with a fresh Stein
    thinning baseline of the same size, runs one full swap sweep over
    each, and returns the index multiset with the smallest final
    squared MMD. A sweep replacement never increases the MMD because
    the incumbent point is always among the argmin candidates.

    Args:
        oracle: mean-zero KernelOracle.
        candidates: list of index multisets, each of size m.
        m: coreset size.

    Returns:
        (m,) int array of refined coreset indices.
    """
    if len(candidates) == 0:
        raise ValueError("empty candidate list")
    candidates = [np.asarray(c, dtype=int) for c in candidates]
    for c in candidates:
        if len(c) != m:
            raise ValueError("all candidates must have size m")

    best = min(range(len(candidates)),
               key=lambda l: _coreset_mmd_sq(oracle, candidates[l]))
    st_idx, _ = stein_thinning(oracle, m)
    shortlist = [candidates[best].copy(), st_idx.copy()]

    diag = oracle.diag()
    finished = []
    for sel in shortlist:
        g = _sum_rows(oracle, sel)
        for j in range(m):
            row_out = oracle.row(sel[j])
            delta = 2.0 * (g - row_out) + diag
            k = int(np.argmin(delta))
            if k != sel[j]:
                g += oracle.row(k) - row_out
                sel[j] = k
        finished.append(sel)
    scores = [_coreset_mmd_sq(oracle, sel) for sel in finished]
    return finished[int(np.argmin(scores))]


def kt_swap_ls(oracle, w, mode, return_state=False):
    """Swap refinement with a line search over the mixing weight.

    For each point i of the initial support, removes i (rescaling the
    remaining mass), then adds back the point k whose optimal mixture
    (1 - a) w + a e_k minimizes the quadratic objective; a is clipped to
    [0, 1] in simplex mode. Maintains g = K w and D = w^T K w so that
    each step needs O(n) kernel evaluations. The objective never
    increases across the pass.

    Args:
        oracle: mean-zero KernelOracle.
        w: WeightVector (simplex or equal-multiset for mode "splx",
            constant-preserving for mode "cp").
        mode: "splx" or "cp".

    Returns:
        Refined WeightVector of the matching kind.
    """
    if mode not in (SIMPLEX, "splx", CP):
        raise ValueError(f"unknown mode {mode!r}")
    splx = mode in (SIMPLEX, "splx")
    if splx and w.kind not in (SIMPLEX, EQUAL):
        raise ValueError("simplex mode needs nonnegative weights")

    n = oracle.n
    wv = w.w.copy()
    diag = oracle.diag()
    support = np.nonzero(wv)[0]
    all_idx = np.arange(n)

    if support.size:
        g = wv[support] @ oracle.block(support, all_idx)
        D = float(wv[support] @ g[support])
    else:
        g = np.zeros(n)
        D = 0.0

    for i in support:
        wi = wv[i]
        if wi == 1.0:
            if np.count_nonzero(wv) > 1:
                # Removing i would leave zero total mass to rescale.
                continue
            # Sole atom: re-seat the whole mass on the best diagonal.
            k = int(np.argmin(diag))
            if k != i:
                wv[i] = 0.0
                wv[k] = 1.0
                g = oracle.row(k)
                D = float(diag[k])
            continue
        # Remove point i and renormalize the remaining mass.
        D += -2.0 * wi * g[i] + wi * wi * diag[i]
        g -= wi * oracle.row(i)
        wv[i] = 0.0
        scale = 1.0 / (1.0 - wi)
        g *= scale
        D *= scale * scale
        wv *= scale
        # Line search over all candidate points.
        denom = D - 2.0 * g + diag
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(denom != 0.0, (D - g) / denom, 0.0)
        if splx:
            alpha = np.clip(alpha, 0.0, 1.0)
        dprime = (1.0 - alpha) ** 2 * D + 2.0 * alpha * (1.0 - alpha) * g \
            + alpha ** 2 * diag
        k = int(np.argmin(dprime))
        ak = float(alpha[k])
        if ak != 0.0:
            g *= 1.0 - ak
            D *= (1.0 - ak) ** 2
            wv *= 1.0 - ak
            D += 2.0 * ak * g[k] + ak * ak * diag[k]
            g += ak * oracle.row(k)
            wv[k] += ak

    total = wv.sum()
    if abs(total - 1.0) > 5e-13:
        wv /= total
    out = WeightVector(wv, SIMPLEX if splx else CP)
    if return_state:
        return out, g, D
    return out
