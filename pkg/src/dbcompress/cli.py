"""Command line interface: compress, metrics, simulate, diag.

Exit codes: 0 on success, 2 on input errors (parse/shape/range), 3 on
numerical failures.
"""

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import fileio, samplers
from .greedy import stein_thinning
from .kernels import BaseKernel, Preconditioner, make_stein_cache, median_bandwidth
from .linalg import NumericalError
from .lowrank import weighted_rpcholesky
from .oracles import (NonPsdKernelError, SteinOracle, energy_distance,
                      kernel_radius, mmd_sq, point_radius)
from .pipelines import (lskt, skt, standard_thin, stein_cholesky,
                        stein_recombination)

METHODS = ("st", "skt", "lskt", "sr", "lsr", "sc", "lsc")


@dataclass
class RunConfig:
    """Resolved run parameters shared by the commands."""

    method: str = "skt"
    m: int = 32
    rank: int = None
    amd_steps: int = None
    rounds: int = 3
    oversample: int = 4
    delta: float = 0.5
    seed: int = 0
    n0: int = None
    kernel: str = "imq"
    sigma: str = "median"
    precond: str = "identity"
    extra: dict = field(default_factory=dict)

    def resolved(self, n0):
        rank = self.rank if self.rank is not None else self.m
        amd_steps = self.amd_steps if self.amd_steps is not None \
            else math.ceil(7.0 * math.sqrt(n0))
        return rank, amd_steps


def _add_config_flags(p):
    p.add_argument("--method", choices=METHODS, default="skt")
    p.add_argument("--m", type=int, default=32, help="coreset size")
    p.add_argument("--rank", type=int, default=None,
                   help="low-rank approximation rank (default: m)")
    p.add_argument("--amd-steps", type=int, default=None,
                   help="mirror descent steps (default: ceil(7 sqrt(n0)))")
    p.add_argument("--rounds", type=int, default=3, help="adaptive rounds")
    p.add_argument("--oversample", type=int, default=4,
                   help="compress oversampling parameter")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n0", type=int, default=None,
                   help="standard thin the input to this size first")
    p.add_argument("--kernel", choices=("imq", "gaussian"), default="imq")
    p.add_argument("--sigma", default="median",
                   help="base kernel bandwidth sigma, or 'median'")
    p.add_argument("--precond", default="identity",
                   help="identity, a matrix file, or neg-hessian:<file>")


def _config_from_args(args):
    return RunConfig(method=args.method, m=args.m, rank=args.rank,
                     amd_steps=args.amd_steps, rounds=args.rounds,
                     oversample=args.oversample, delta=args.delta,
                     seed=args.seed, n0=args.n0, kernel=args.kernel,
                     sigma=args.sigma, precond=args.precond)


def _load_points_scores(points_file, scores_file):
    points = fileio.read_matrix(points_file)
    scores = fileio.read_matrix(scores_file)
    if points.shape != scores.shape:
        raise ValueError(
            f"scores shape {scores.shape} does not match points shape "
            f"{points.shape}")
    return points, scores


def _build_precond(spec, d):
    if spec == "identity":
        return Preconditioner.identity(d), "identity"
    path = spec.split(":", 1)[1] if spec.startswith("neg-hessian:") else spec
    M = fileio.read_matrix(path)
    if M.shape != (d, d):
        raise ValueError(f"preconditioner shape {M.shape} is not ({d}, {d})")
    return Preconditioner(M), spec


def _resolve_sigma_sq(cfg, points, precond):
    if cfg.sigma == "median":
        return median_bandwidth(points, precond)
    sigma = float(cfg.sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return sigma * sigma


def _build_oracle(points, scores, cfg):
    precond, _ = _build_precond(cfg.precond, points.shape[1])
    sigma_sq = _resolve_sigma_sq(cfg, points, precond)
    base = BaseKernel(cfg.kernel, sigma_sq)
    cache = make_stein_cache(points, scores, base, precond)
    return SteinOracle(cache), sigma_sq


def _run_method(oracle, cfg, n0):
    rank, amd_steps = cfg.resolved(n0)
    rng = np.random.default_rng(cfg.seed)
    low_rank = (rank, amd_steps, cfg.rounds)
    if cfg.method == "st":
        _, w = stein_thinning(oracle, cfg.m)
        return w
    if cfg.method == "skt":
        return skt(oracle, cfg.m, cfg.delta, rng)
    if cfg.method == "lskt":
        return lskt(oracle, rank, amd_steps, cfg.rounds, cfg.oversample,
                    cfg.delta, rng)
    if cfg.method == "sr":
        return stein_recombination(oracle, cfg.m, rng)
    if cfg.method == "lsr":
        return stein_recombination(oracle, cfg.m, rng, low_rank=low_rank)
    if cfg.method == "sc":
        return stein_cholesky(oracle, cfg.m, rng)
    if cfg.method == "lsc":
        return stein_cholesky(oracle, cfg.m, rng, low_rank=low_rank)
    raise ValueError(f"unknown method {cfg.method!r}")


def _thin_input(points, scores, cfg):
    n = points.shape[0]
    n0 = cfg.n0 if cfg.n0 is not None else n
    if not (1 <= n0 <= n):
        raise ValueError(f"n0 must lie in [1, {n}]")
    if n0 < n:
        keep = standard_thin(n, n0)
        return points[keep], scores[keep], keep
    return points, scores, np.arange(n)


def _diag_json_path(out_path):
    text = str(out_path)
    stem = text[:-4] if text.endswith(".csv") else text
    return stem + ".json"


def cmd_compress(args):
    cfg = _config_from_args(args)
    points, scores = _load_points_scores(args.points, args.scores)
    points, scores, keep = _thin_input(points, scores, cfg)
    oracle, sigma_sq = _build_oracle(points, scores, cfg)

    start = time.perf_counter()
    w = _run_method(oracle, cfg, points.shape[0])
    wall_ms = 1000.0 * (time.perf_counter() - start)

    supp = w.support()
    value = mmd_sq(oracle, w)
    fileio.write_coreset(args.out, keep[supp], w.w[supp])
    diagnostics = {
        "schema": 1,
        "mmd_sq": value,
        "wall_ms": wall_ms,
        "seed": cfg.seed,
        "params": {
            "method": cfg.method, "m": cfg.m,
            "rank": cfg.resolved(points.shape[0])[0],
            "amd_steps": cfg.resolved(points.shape[0])[1],
            "rounds": cfg.rounds, "oversample": cfg.oversample,
            "delta": cfg.delta, "n0": int(points.shape[0]),
            "kernel": cfg.kernel, "sigma_sq": sigma_sq,
            "precond": cfg.precond,
        },
    }
    with open(_diag_json_path(args.out), "w") as f:
        json.dump(diagnostics, f, indent=2)
    return 0


def cmd_metrics(args):
    cfg = _config_from_args(args)
    points, scores = _load_points_scores(args.points, args.scores)
    indices, wvals = fileio.read_coreset(args.coreset)
    n = points.shape[0]
    if np.any(indices < 0) or np.any(indices >= n):
        raise ValueError(f"coreset indices out of range [0, {n})")

    precond, _ = _build_precond(cfg.precond, points.shape[1])
    # Bandwidth follows the same thinning protocol as compression.
    thinned, _, _ = _thin_input(points, scores, cfg)
    sigma_sq = (median_bandwidth(thinned, precond) if cfg.sigma == "median"
                else float(cfg.sigma) ** 2)
    base = BaseKernel(cfg.kernel, sigma_sq)
    cache = make_stein_cache(points[indices], scores[indices], base, precond)
    oracle = SteinOracle(cache)
    value = float(wvals @ oracle.block(np.arange(len(wvals)),
                                       np.arange(len(wvals))) @ wvals)
    out = {"schema": 1, "mmd": math.sqrt(max(value, 0.0))}
    if args.reference is not None:
        ref = fileio.read_matrix(args.reference)
        wpos = np.maximum(wvals, 0.0)
        if abs(wvals.sum() - 1.0) > 1e-9 or np.any(wvals < 0):
            # Energy distance needs simplex weights; project if needed.
            wpos = wpos / wpos.sum()
        out["energy_distance"] = energy_distance(
            points[indices], wpos, ref, np.full(ref.shape[0], 1.0 / ref.shape[0]))
    print(json.dumps(out))
    return 0


def cmd_simulate(args):
    points, scores = samplers.simulate(args.scenario, args.n, args.d, args.seed)
    fileio.write_matrix(args.out + "_points.bin", points)
    fileio.write_matrix(args.out + "_scores.bin", scores)
    return 0


def cmd_diag(args):
    cfg = _config_from_args(args)
    points, scores = _load_points_scores(args.points, args.scores)
    points, scores, _ = _thin_input(points, scores, cfg)
    oracle, _ = _build_oracle(points, scores, cfg)
    n = points.shape[0]
    rng = np.random.default_rng(cfg.seed)
    r_max = min(n, max(cfg.rank if cfg.rank is not None else 64, 1))
    factor = weighted_rpcholesky(oracle, np.full(n, 1.0 / n), r_max, rng)
    trace0 = float(oracle.diag().sum())
    col_norms = np.einsum("ij,ij->j", factor.F, factor.F)
    curve = {"0": trace0}
    r = 1
    while r <= factor.columns_used:
        curve[str(r)] = float(trace0 - col_norms[:r].sum())
        r *= 2
    out = {
        "schema": 1,
        "kernel_radius": kernel_radius(oracle),
        "point_radius": point_radius(points),
        "rpc_residual_curve": curve,
    }
    print(json.dumps(out))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dbcompress",
        description="Debiased distribution compression with Stein kernels")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress points into a coreset")
    p.add_argument("points")
    p.add_argument("scores")
    p.add_argument("--out", required=True, help="coreset CSV output path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("metrics", help="evaluate a coreset")
    p.add_argument("points")
    p.add_argument("scores")
    p.add_argument("coreset")
    p.add_argument("--reference", default=None,
                   help="reference points file for energy distance")
    _add_config_flags(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate", help="draw synthetic biased samples")
    p.add_argument("scenario",
                   help="iid-target | iid-offtarget(shift) | "
                        "mala-burnin(start,step) | tempered(tau)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diag", help="kernel diagnostics")
    p.add_argument("points")
    p.add_argument("scores")
    _add_config_flags(p)
    p.set_defaults(func=cmd_diag)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, NonPsdKernelError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
