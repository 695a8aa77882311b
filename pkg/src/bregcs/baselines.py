"""Comparison confidence sequences from the literature.

Laplace (sub-Gaussian method of mixtures), Bentkus-style geometric peeling
with a pluggable inner quantile, Kaufmann-Koolen mixture bounds for the
Gaussian and Exponential families, the hedged-capital betting construction
for [0, 1]-valued data, and a union-bound chi-square set for N(mu, sigma^2).
"""
import math
from functools import lru_cache

import numpy as np

from ._accel import jit
from .errors import ConvergenceError, DomainError, SupportError
from .specfun import riemann_zeta

ETA = 1.1
_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def _check_delta(delta):
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")


# --------------------------------------------------------------------------- #
# Laplace

def laplace_radius(sigma, n, delta, bernoulli=False):
    """Half-width sigma * sqrt((1 + 1/n) log(2 sqrt(1+n) / delta) / n).

    ``bernoulli=True`` gives the [0, 1]-bounded version, which uses sigma = 1
    with 2n in the denominator (a 1/2-sub-Gaussian variable).
    """
    _check_delta(delta)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n = np.asarray(n, dtype=float)
    core = (1.0 + 1.0 / n) * np.log(2.0 * np.sqrt(1.0 + n) / delta)
    out = np.sqrt(core / (2.0 * n)) if bernoulli else sigma * np.sqrt(core / n)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------- #
# Bentkus peeling

def peeling_epoch(n, eta=ETA):
    """(k_n, c_n): the smallest k with ceil(eta^k) <= n <= floor(eta^(k+1)), and floor(eta^(k_n+1))."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = 0
    while True:
        if math.ceil(eta ** k) <= n <= math.floor(eta ** (k + 1)):
            return k, math.floor(eta ** (k + 1))
        k += 1


@lru_cache(maxsize=None)
def _zeta(s):
    return riemann_zeta(s)


def peeling_weight(k, eta=ETA):
    """h(k) = zeta(eta) (k + 1)^eta."""
    return _zeta(eta) * (k + 1) ** eta


def hoeffding_quantile(delta_prime, N, A, B):
    """Conservative stand-in for the Bentkus quantile: B sqrt(N log(1/delta') / 2)."""
    return B * math.sqrt(N * math.log(1.0 / delta_prime) / 2.0)


def bentkus_peeling_radius(n, delta, inner_quantile=hoeffding_quantile):
    """(1/n) q(delta / (2 h(k_n)); c_n, 1/2, 1) for [0, 1]-valued data."""
    _check_delta(delta)
    k, cn = peeling_epoch(n)
    return inner_quantile(delta / (2.0 * peeling_weight(k)), cn, 0.5, 1.0) / n


# --------------------------------------------------------------------------- #
# Kaufmann-Koolen

def kk_g(lam, kind="gaussian"):
    """g(lambda) = 2 lambda (1 - log 4 lambda) + log zeta(2 lambda) - w log(1 - lambda)."""
    w = 0.5 if kind == "gaussian" else 1.0
    return 2.0 * lam * (1.0 - math.log(4.0 * lam)) + math.log(_zeta(2.0 * lam)) - w * math.log(1.0 - lam)


@lru_cache(maxsize=256)
def kk_threshold_cg(x, kind="gaussian"):
    """C^g(x) = min over lambda in (1/2, 1] of (g(lambda) + x) / lambda, by golden section."""
    if kind not in ("gaussian", "exponential"):
        raise ValueError(f"kind must be 'gaussian' or 'exponential', got {kind!r}")
    f = lambda lam: (kk_g(lam, kind) + x) / lam
    a, b = 0.5 + 1e-6, 1.0 - 1e-6
    x1, x2 = b - _GOLD * (b - a), a + _GOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > 1e-10:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = f(x2)
    return min(f1, f2)


def _bisect(f, lo, hi, tol=1e-13, max_iter=400):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if abs(hi - lo) <= tol * (1.0 + abs(mid)):
            break
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kaufmann_koolen_set(kind, n, mean, delta, sigma=1.0):
    """Interval {mu : d(mean, mu) <= (2/n) log(4 + log n) + C^g(log 1/delta) / n}.

    d is the divergence from the empirical distribution to the candidate:
    (mean - mu)^2 / (2 sigma^2) for the Gaussian family and
    mean/mu - 1 - log(mean/mu) for the Exponential family.
    """
    _check_delta(delta)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    tau = 2.0 / n * math.log(4.0 + math.log(n)) + kk_threshold_cg(math.log(1.0 / delta), kind) / n
    if kind == "gaussian":
        r = sigma * math.sqrt(2.0 * tau)
        return mean - r, mean + r
    if kind != "exponential":
        raise ValueError(f"kind must be 'gaussian' or 'exponential', got {kind!r}")
    if not mean > 0:
        raise DomainError(f"exponential mean estimate must be positive, got {mean}")
    # x = mean / mu solves x - 1 - log x = tau on either side of 1
    d = lambda x: x - 1.0 - math.log(x) - tau
    hi_x = 2.0
    while d(hi_x) < 0:
        hi_x *= 2.0
    lo_x = 0.5
    while d(lo_x) < 0:
        lo_x *= 0.5
    x_small = _bisect(d, lo_x, 1.0)
    x_big = _bisect(d, 1.0, hi_x)
    return mean / x_big, mean / x_small


# --------------------------------------------------------------------------- #
# Hedged capital

def hedged_capital_bets(samples, delta):
    """The predictable bet sizes lambda_k, k = 1..n."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    k = np.arange(1, n + 1)
    mu_hat = (0.5 + np.cumsum(x)) / (k + 1)
    sig2 = (0.25 + np.cumsum((x - mu_hat) ** 2)) / (k + 1)
    sig2_prev = np.concatenate([[0.25], sig2[:-1]])
    return np.sqrt(2.0 * math.log(2.0 / delta) / (sig2_prev * k * np.log(k + 1.0)))


@jit
def _hc_log_capital(x, lam, m):
    """Running log max(K+, K-) at candidate mean m."""
    n = x.size
    out = np.empty(n)
    lp = 0.0
    lm = 0.0
    cap_p = np.inf if m == 0.0 else 0.5 / m
    cap_m = np.inf if m == 1.0 else 0.5 / (1.0 - m)
    for i in range(n):
        a = min(abs(lam[i]), cap_p)
        b = min(abs(lam[i]), cap_m)
        lp += math.log1p(a * (x[i] - m))
        lm += math.log1p(-b * (x[i] - m))
        out[i] = max(lp, lm)
    return out


@jit
def _hc_grid_members(x, lam, grid, thresh):
    # members[i, j]: candidate grid[j] still in the set after i + 1 samples (no intersection)
    out = np.empty((x.size, grid.size), dtype=np.bool_)
    for j in range(grid.size):
        lk = _hc_log_capital(x, lam, grid[j])
        for i in range(x.size):
            out[i, j] = lk[i] < thresh
    return out


def _check_unit(samples):
    x = np.asarray(samples, dtype=float)
    bad = ~((x >= 0) & (x <= 1))
    if bad.any():
        v = x[np.argmax(bad)]
        raise SupportError(f"hedged capital needs samples in [0, 1], got {v!r}", v)
    return x


def hedged_capital_log_capital(samples, delta, m):
    """log K_n(m) for n = 1..len(samples)."""
    _check_delta(delta)
    x = _check_unit(samples)
    return _hc_log_capital(x, hedged_capital_bets(x, delta), float(m))


def hedged_capital_envelope(samples, delta, step=1e-4, refine=True):
    """Per-n (lower, upper) of {m in [0, 1] : K_n(m) < 1/delta}, before any intersection.

    K_n is the unweighted max(K+, K-).  The mixture that Ville's inequality
    controls is (K+ + K-)/2, so this set is only guaranteed at level 2 delta;
    observed coverage at delta = 0.05 sits between 0.93 and 0.95.

    Membership is evaluated on a grid of spacing ``step``; the two outermost
    crossings are then refined by bisection.
    """
    _check_delta(delta)
    x = _check_unit(samples)
    lam = hedged_capital_bets(x, delta)
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    thresh = math.log(1.0 / delta)
    members = _hc_grid_members(x, lam, grid, thresh)
    n = x.size
    lo = np.full(n, np.nan)
    hi = np.full(n, np.nan)
    for i in range(n):
        idx = np.nonzero(members[i])[0]
        if idx.size == 0:
            continue
        a, b = idx[0], idx[-1]
        lo[i], hi[i] = grid[a], grid[b]
        if not refine:
            continue
        f = lambda m: _hc_log_capital(x[:i + 1], lam[:i + 1], m)[-1] - thresh
        if a > 0:
            lo[i] = _bisect(f, grid[a - 1], grid[a], tol=1e-12)
        if b < grid.size - 1:
            hi[i] = _bisect(f, grid[b], grid[b + 1], tol=1e-12)
    return lo, hi


def hedged_capital_set(samples, delta, step=1e-4):
    """(lower, upper) of the hedged-capital set after all samples."""
    lo, hi = hedged_capital_envelope(samples, delta, step)
    return float(lo[-1]), float(hi[-1])


# --------------------------------------------------------------------------- #
# chi-square union bound for N(mu, sigma^2)

def _gammainc_series(a, x):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gammaincc_cf(a, x):
    # modified Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_regularized(a, x):
    """(P(a, x), Q(a, x)), the regularised lower and upper incomplete gamma functions."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    if x <= 0:
        return 0.0, 1.0
    if x < a + 1.0:
        p = _gammainc_series(a, x)
        return p, 1.0 - p
    q = _gammaincc_cf(a, x)
    return 1.0 - q, q


def chi2_quantile(p, dof):
    """x with P(chi2(dof) <= x) = p, by bisection; the tail closer to p is matched directly."""
    if not 0 < p < 1:
        raise DomainError(f"p must be in (0, 1), got {p}")
    a = 0.5 * dof
    upper = p > 0.5

    def err(x):
        P, Q = gammainc_regularized(a, 0.5 * x)
        return (1.0 - p) - Q if upper else P - p

    lo, hi = 0.0, max(1.0, float(dof))
    while err(hi) < 0:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * mid:
            return mid
        if err(mid) < 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"chi2_quantile({p}, {dof}) did not converge", 0.5 * (lo + hi))


@lru_cache(maxsize=64)
def chi2_union_bands(horizon, delta):
    """Lower and upper chi-square quantiles at levels delta/(2N), 1 - delta/(2N) for s = 1..N."""
    _check_delta(delta)
    lvl = delta / (2.0 * horizon)
    lo = np.array([chi2_quantile(lvl, s) for s in range(1, horizon + 1)])
    hi = np.array([chi2_quantile(1.0 - lvl, s) for s in range(1, horizon + 1)])
    return lo, hi


def chi2_union_membership(samples, horizon, delta, mu, sigma, t):
    """True iff (mu, sigma) passes the chi-square sandwich for every s <= t."""
    if not 1 <= t <= horizon:
        raise ValueError(f"need 1 <= t <= horizon, got t={t}, horizon={horizon}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    x = np.asarray(samples, dtype=float)[:t]
    if x.size < t:
        raise ValueError(f"need at least t={t} samples, got {x.size}")
    z = np.cumsum(((x - mu) / sigma) ** 2)
    lo, hi = chi2_union_bands(int(horizon), float(delta))
    return bool(np.all((lo[:t] <= z) & (z <= hi[:t])))
