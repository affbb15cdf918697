"""Synthetic biased samplers with analytic scores for the N(0, I) target.

All scenarios report scores of the *target* N(0, I_d), i.e. -x, no
matter how the points themselves were produced; the point of the suite
is to correct sampling bias using only target score information.
"""

import math
import re

import numpy as np


def parse_scenario(text):
    """Parse 'name', 'name(a,b)' or 'name:a,b' into (name, args)."""
    m = re.fullmatch(r"([a-z-]+)(?:[:(]([^)]*)\)?)?", text.strip())
    if not m:
        raise ValueError(f"cannot parse scenario {text!r}")
    name = m.group(1)
    args = []
    if m.group(2):
        args = [float(v) for v in m.group(2).split(",") if v.strip()]
    return name, args


def _mala_chain(n, d, start, step, rng):
    """Metropolis-adjusted Langevin chain targeting N(0, I_d).

    Proposal x + (step^2 / 2) grad log p(x) + step * xi with the
    standard Metropolis correction.
    """
    half = 0.5 * step * step
    x = np.full(d, float(start))
    out = np.empty((n, d))

    def log_p(v):
        return -0.5 * float(v @ v)

    def log_q(to, frm):
        mean = frm - half * frm
        diff = to - mean
        return -float(diff @ diff) / (2.0 * step * step)

    for i in range(n):
        prop = x - half * x + step * rng.standard_normal(d)
        log_acc = log_p(prop) - log_p(x) + log_q(x, prop) - log_q(prop, x)
        if math.log(rng.random()) < log_acc:
            x = prop
        out[i] = x
    return out


def simulate(scenario, n, d, seed):
    """Draw a biased sample plus target scores for a named scenario.

    Scenarios:
        iid-target: n iid draws from N(0, I_d).
        iid-offtarget(shift): iid draws from N(shift * 1, I_d).
        mala-burnin(start, step): MALA chain started at start * 1.
        tempered(tau): iid draws from N(0, tau * I_d).

    Returns:
        (points, scores), both (n, d); scores are -points.
    """
    name, args = parse_scenario(scenario) if isinstance(scenario, str) \
        else (scenario[0], list(scenario[1]))
    rng = np.random.default_rng(seed)
    if name == "iid-target":
        points = rng.standard_normal((n, d))
    elif name == "iid-offtarget":
        shift = args[0] if args else 2.0
        points = rng.standard_normal((n, d)) + shift
    elif name == "mala-burnin":
        start = args[0] if args else 10.0
        step = args[1] if len(args) > 1 else 0.5
        points = _mala_chain(n, d, start, step, rng)
    elif name == "tempered":
        tau = args[0] if args else 4.0
        points = rng.standard_normal((n, d)) * math.sqrt(tau)
    else:
        raise ValueError(f"unknown scenario {name!r}")
    scores = -points
    return points, scores
