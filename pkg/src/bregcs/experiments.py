"""Monte Carlo drivers behind the command-line tools.

Replicate r of a study with master seed S always uses the generator
``np.random.default_rng([S, r])``, so any replicate can be rerun on its own.
Replicates are spread over a thread pool and gathered in replicate order.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import baselines as bl
from . import linbandit as lb
from .confseq import envelope_from_stats, first_exit, level_2d_rows, tune_c
from .families import FamilyKind, SuffStats, cumulative_stats
from .glr import GlrConfig, run_detector
from .specfun import inverse_digamma


def rep_rng(seed, rep):
    return np.random.default_rng([int(seed), int(rep)])


def sample(kind, p, n, rng):
    """n draws from the family member with user parameter ``p``."""
    name = kind.name
    if name == "Gaussian2D":
        mu, sigma = p
        return rng.normal(mu, sigma, n)
    p = float(p)
    if name == "GaussianMean":
        return rng.normal(p, kind.hyper, n)
    if name == "GaussianVariance":
        return rng.normal(kind.hyper, p, n)
    if name == "Bernoulli":
        return rng.binomial(1, p, n).astype(float)
    if name == "Exponential":
        return rng.exponential(p, n)
    if name == "Gamma":
        return rng.gamma(kind.hyper, p, n)
    if name == "Weibull":
        return p * rng.weibull(kind.hyper, n)
    if name == "Pareto":
        return 1.0 + rng.pareto(p, n)
    if name == "Poisson":
        return rng.poisson(p, n).astype(float)
    return rng.chisquare(p, n)


def _workers(threads):
    return threads or min(8, os.cpu_count() or 1)


def _map(fn, reps, threads=None):
    w = _workers(threads)
    if w == 1 or reps < 4:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(w) as pool:
        return list(pool.map(fn, range(reps)))


def _cell_centre(value, lo, hi, cells):
    j = min(max(int((value - lo) / (hi - lo) * cells), 0), cells - 1)
    return lo + (j + 0.5) * (hi - lo) / cells


# --------------------------------------------------------------------------- #
# coverage

def coverage_study(kind, p, n_max=200, delta=0.05, c=1.0, reps=1000, seed=0, grid2d=None, threads=None):
    """Fraction of replicates whose true parameter ever leaves the running intersection.

    For Gaussian2D, ``grid2d=(box, resolution)`` additionally tests the grid
    cell containing the truth, as a grid-based set would.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    kind.check_param(p)

    def one(r):
        xs = sample(kind, p, n_max, rep_rng(seed, r))
        stats = cumulative_stats(kind, xs)
        exact = first_exit(kind, stats, c, delta, p) > 0
        cell = exact
        if grid2d is not None:
            ((m0, m1), (s0, s1)), (rows, cols) = grid2d
            mu_c = _cell_centre(p[0], m0, m1, cols)
            sd_c = _cell_centre(p[1], s0, s1, rows)
            cell = bool(np.any(level_2d_rows(stats, c, delta, mu_c, sd_c) > 0))
        return exact, cell

    res = _map(one, reps, threads)
    violations = sum(e for e, _ in res)
    out = {
        "family": kind.name, "param": p if np.ndim(p) == 0 else list(p), "delta": delta, "c": c,
        "reps": reps, "n_max": n_max, "violations": int(violations),
        "violation_rate": violations / reps, "seed": seed,
    }
    if grid2d is not None:
        v = sum(g for _, g in res)
        out["violations_grid"] = int(v)
        out["violation_rate_grid"] = v / reps
    return out


# --------------------------------------------------------------------------- #
# envelopes

BASELINES = ("laplace", "bentkus", "kaufmann-koolen", "hedged-capital")


def _baseline_applies(method, kind):
    if method == "laplace":
        return kind.name in ("GaussianMean", "Bernoulli")
    if method in ("bentkus", "hedged-capital"):
        return kind.name == "Bernoulli"
    if method == "kaufmann-koolen":
        return kind.name in ("GaussianMean", "Exponential")
    raise ValueError(f"unknown baseline {method!r}; choose from {BASELINES}")


def _baseline_bounds(method, kind, xs, delta):
    n = np.arange(1, xs.size + 1)
    mean = np.cumsum(xs) / n
    if method == "laplace":
        sigma = 0.5 if kind.name == "Bernoulli" else kind.hyper
        r = np.array([bl.laplace_radius(sigma, k, delta) for k in n])
        return mean - r, mean + r
    if method == "bentkus":
        r = np.array([bl.bentkus_peeling_radius(k, delta) for k in n])
        return mean - r, mean + r
    if method == "kaufmann-koolen":
        fam = "gaussian" if kind.name == "GaussianMean" else "exponential"
        pairs = [bl.kaufmann_koolen_set(fam, k, m, delta, kind.hyper) for k, m in zip(n, mean)]
        return np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])
    return bl.hedged_capital_envelope(xs, delta)


def estimate_path(kind, stats):
    """Running plug-in estimate of the user parameter (NaN where undefined)."""
    n = stats[:, 0]
    name = kind.name
    with np.errstate(divide="ignore", invalid="ignore"):
        if name in ("GaussianMean", "Bernoulli", "Exponential", "Poisson"):
            return stats[:, 1] / n
        if name == "Gamma":
            return stats[:, 1] / (n * kind.hyper)
        if name == "GaussianVariance":
            return np.sqrt(stats[:, 2] / n)
        if name == "Weibull":
            return (stats[:, 5] / n) ** (1.0 / kind.hyper)
        if name == "Pareto":
            return n / stats[:, 3]
        if name == "ChiSquare":
            # E log(X/2) = digamma(k/2)
            return np.array([2.0 * inverse_digamma(v) for v in stats[:, 4] / n])
    return np.full(n.shape, np.nan)


def envelope_study(kind, p, n_max=200, delta=0.05, c=1.0, reps=1, seed=0, baselines=(), threads=None):
    """Rows (method, rep, n, lower, upper, estimate); every method is running-intersected."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if kind.dim != 1:
        raise ValueError("envelope_study needs a one-dimensional family")
    kind.check_param(p)
    methods = [m for m in baselines if _baseline_applies(m, kind)]

    def one(r):
        xs = sample(kind, p, n_max, rep_rng(seed, r))
        stats = cumulative_stats(kind, xs)
        est = estimate_path(kind, stats)
        env = envelope_from_stats(kind, stats, c, delta)
        rows = [("bregman", r, i + 1, env.lower[i], env.upper[i], est[i]) for i in range(n_max)]
        for m in methods:
            lo, hi = _baseline_bounds(m, kind, xs, delta)
            lo, hi = np.maximum.accumulate(lo), np.minimum.accumulate(hi)
            rows += [(m, r, i + 1, lo[i], hi[i], est[i]) for i in range(n_max)]
        return rows

    out = []
    for rows in _map(one, reps, threads):
        out.extend(rows)
    order = {m: i for i, m in enumerate(["bregman", *methods])}
    out.sort(key=lambda row: (order[row[0]], row[1], row[2]))
    return out


# --------------------------------------------------------------------------- #
# change points

def changepoint_study(sigma0=1.0, sigma1=1.0, t_star=50, horizon=100, delta=0.05, c=1.0, reps=1000,
                      seed=0, scan="full", mu=0.0, threads=None):
    """Rows (rep, detection_time, detected) for a centred Gaussian whose scale jumps after t_star."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if not (sigma0 > 0 and sigma1 > 0):
        raise ValueError("sigma0 and sigma1 must be positive")
    kind = FamilyKind("GaussianVariance", mu)
    cfg = GlrConfig(delta=delta, c=c, horizon=horizon, scan=scan)
    t_star = min(int(t_star), horizon)

    def one(r):
        rng = rep_rng(seed, r)
        xs = np.concatenate([rng.normal(mu, sigma0, t_star), rng.normal(mu, sigma1, horizon - t_star)])
        hit = run_detector(kind, xs, cfg)
        return (r, hit[0], 1) if hit else (r, horizon, 0)

    return _map(one, reps, threads)


# --------------------------------------------------------------------------- #
# tuning c

def tune_c_study(kind, p, n0s=(50, 100, 200), delta=0.05, reps=100, seed=0, c_range=(0.01, 100.0), threads=None):
    """Rows (n0, c_star, width): c minimising the width at n0, averaged over replicates."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    kind.check_param(p)
    n_max = max(n0s)

    def one(r):
        xs = sample(kind, p, n_max, rep_rng(seed, r))
        stats = cumulative_stats(kind, xs)
        return [tune_c(kind, SuffStats.from_array(stats[n0 - 1]), delta, c_range) for n0 in n0s]

    res = _map(one, reps, threads)
    rows = []
    for j, n0 in enumerate(n0s):
        cs = np.array([r[j][0] for r in res])
        ws = np.array([r[j][1] for r in res])
        rows.append((n0, float(cs.mean()), float(ws.mean())))
    return rows


def fitted_slope(rows):
    """Least-squares slope of c_star against n0."""
    x = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows], dtype=float)
    return float(np.polyfit(x, y, 1)[0])


# --------------------------------------------------------------------------- #
# linear bandit

def bandit_demo(d=3, n=200, delta=0.05, seed=0, sigma_range=(0.5, 2.0)):
    """Rows (n, info_gain, radius_sq_paper, radius_ay, covered) for random arms and a planted theta."""
    rng = rep_rng(seed, 0)
    theta = rng.normal(size=d) / math.sqrt(d)
    state = lb.DesignState.new(d)
    rows = []
    for t in range(1, n + 1):
        phi = rng.normal(size=d)
        sigma = rng.uniform(*sigma_range)
        lb.update(state, phi, float(phi @ theta + sigma * rng.normal()), sigma)
        chk = lb.in_ellipsoid(state, theta, delta)
        rows.append((t, lb.info_gain(state), chk.radius_sq, chk.radius_ay, int(chk.member)))
    return rows
