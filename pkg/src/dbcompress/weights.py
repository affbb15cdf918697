"""Weight vectors with kind-specific invariants.

Three kinds of coreset weights are supported:

* ``equal``: an equal-weighted multiset of denominator m, so every entry
  is a multiple of 1/m and the entries sum to 1,
* ``simplex``: nonnegative entries summing to 1,
* ``cp`` (constant-preserving): real entries summing to 1 (negative
  weights allowed).
"""

import numpy as np

EQUAL = "equal"
SIMPLEX = "simplex"
CP = "cp"

_SUM_TOL = 1e-12


class WeightVector:
    """An n-vector of coreset weights tagged with its kind.

    Attributes:
        w: (n,) float array of weights.
        kind: one of {"equal", "simplex", "cp"}.
        denom: multiset denominator m (equal kind only, else None).
    """

    __slots__ = ("w", "kind", "denom")

    def __init__(self, w, kind, denom=None):
        w = np.asarray(w, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        total = w.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        if kind == EQUAL:
            if denom is None or denom < 1:
                raise ValueError("equal-multiset weights need a denominator m >= 1")
            counts = w * denom
            if not np.allclose(counts, np.round(counts), atol=1e-9):
                raise ValueError("equal-multiset weights must be multiples of 1/m")
            if np.any(counts < -1e-9):
                raise ValueError("equal-multiset weights must be nonnegative")
        elif kind == SIMPLEX:
            if np.any(w < 0):
                raise ValueError("simplex weights must be nonnegative")
            denom = None
        elif kind == CP:
            denom = None
        else:
            raise ValueError(f"unknown weight kind {kind!r}")
        self.w = w
        self.kind = kind
        self.denom = denom

    @classmethod
    def equal_multiset(cls, w, m):
        return cls(w, EQUAL, denom=m)

    @classmethod
    def from_indices(cls, indices, n, m=None):
        """Equal-multiset weights from a size-m index sequence into [n]."""
        indices = np.asarray(indices, dtype=int)
        if m is None:
            m = len(indices)
        w = np.bincount(indices, minlength=n) / m
        return cls(w, EQUAL, denom=m)

    @classmethod
    def simplex(cls, w):
        return cls(w, SIMPLEX)

    @classmethod
    def constant_preserving(cls, w):
        return cls(w, CP)

    @property
    def n(self):
        return self.w.shape[0]

    def support(self):
        """Indices of nonzero weights."""
        return np.nonzero(self.w)[0]

    def sparsity(self):
        return int(np.count_nonzero(self.w))

    def to_indices(self):
        """Expand equal-multiset weights into the sorted index sequence."""
        if self.kind != EQUAL:
            raise ValueError("only equal-multiset weights expand to an index sequence")
        counts = np.round(self.w * self.denom).astype(int)
        return np.repeat(np.arange(self.n), counts)

    def __repr__(self):
        return f"WeightVector(kind={self.kind!r}, n={self.n}, nnz={self.sparsity()})"


def as_weight_array(w):
    """Return the raw weight array of a WeightVector or array-like."""
    if isinstance(w, WeightVector):
        return w.w
    return np.asarray(w, dtype=float)
