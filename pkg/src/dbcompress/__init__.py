"""Debiased distribution compression.

Compress a biased sample sequence into a small weighted coreset that
accurately represents a target distribution, given only the points and
the target's score function. Provides greedy Stein thinning, Stein
kernel thinning, low-rank debiasing, recombination and
constant-preserving Cholesky compression, all with mean-zero Stein
kernels built from Gaussian or inverse multiquadric bases.
"""

from .cholesky import cholesky_thinning, cp_optimal_weights
from .greedy import kt_swap, kt_swap_ls, stein_thinning
from .kernels import (BaseKernel, Preconditioner, SteinKernelCache,
                      fd_stein_oracle, make_stein_cache, median_bandwidth,
                      stein_eval, stein_eval_points)
from .linalg import (NumericalError, log_sum_exp, spd_cholesky, spd_solve,
                     svd_null_rows)
from .lowrank import (LowRankFactor, amd, low_rank_debias,
                      resample_iid, resample_mmd_expectations,
                      resample_residual, resample_stratified,
                      weighted_rpcholesky)
from .oracles import (DenseOracle, KernelOracle, NonPsdKernelError,
                      SteinOracle, energy_distance, kernel_radius, mmd_sq,
                      mmd_sq_between, point_radius)
from .pipelines import (full_debias_oracle, lskt, skt, standard_thin,
                        stein_cholesky, stein_recombination)
from .recombination import (find_bfs, recombination, recombination_thinning,
                            simplex_qp)
from .thinning import (HalveOutcome, compress, halve, kernel_thinning,
                       kt_compresspp, kt_split)
from .weights import WeightVector

__version__ = "0.1.0"

__all__ = [
    "BaseKernel", "Preconditioner", "SteinKernelCache", "WeightVector",
    "KernelOracle", "SteinOracle", "DenseOracle", "LowRankFactor",
    "HalveOutcome", "NumericalError", "NonPsdKernelError",
    "make_stein_cache", "stein_eval", "stein_eval_points", "fd_stein_oracle",
    "median_bandwidth", "mmd_sq", "mmd_sq_between", "energy_distance",
    "kernel_radius", "point_radius",
    "spd_cholesky", "spd_solve", "svd_null_rows", "log_sum_exp",
    "stein_thinning", "kt_swap", "kt_swap_ls",
    "halve", "kt_split", "kernel_thinning", "compress", "kt_compresspp",
    "weighted_rpcholesky", "amd", "low_rank_debias",
    "resample_iid", "resample_residual", "resample_stratified",
    "resample_mmd_expectations",
    "find_bfs", "recombination", "simplex_qp", "recombination_thinning",
    "cp_optimal_weights", "cholesky_thinning",
    "standard_thin", "skt", "lskt", "stein_recombination", "stein_cholesky",
    "full_debias_oracle",
]
