"""Confidence envelopes and sets built from the level functions.

One-dimensional sets are intervals found by a golden-section search for the
minimiser of the level function followed by bisection on each side.  The
Gaussian2D set is evaluated on a grid.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, NumericalAnomaly
from .families import _TABLE, SuffStats, cumulative_stats, level_function_2d


@dataclass
class Envelope:
    """Lower and upper bounds for n = 1..N (entries may be -inf / +inf)."""

    lower: np.ndarray
    upper: np.ndarray

    def __len__(self):
        return self.lower.size

    @property
    def width(self):
        return self.upper - self.lower


@dataclass
class ConfSet2D:
    """Gaussian2D set on a grid of cell centres; rows index sigma, columns mu."""

    box: tuple
    resolution: tuple
    mu: np.ndarray
    sigma: np.ndarray
    membership: np.ndarray
    touches_edge: bool

    def bounding_box(self):
        """((mu_min, mu_max), (sigma_min, sigma_max)) of the member cells, or None."""
        if not self.membership.any():
            return None
        rows = np.nonzero(self.membership.any(axis=1))[0]
        cols = np.nonzero(self.membership.any(axis=0))[0]
        return ((self.mu[cols[0]], self.mu[cols[-1]]), (self.sigma[rows[0]], self.sigma[rows[-1]]))

    def contains(self, mu, sigma):
        """Membership of the grid cell containing (mu, sigma); False outside the box."""
        (m0, m1), (s0, s1) = self.box
        rows, cols = self.resolution
        if not (m0 <= mu <= m1 and s0 <= sigma <= s1):
            return False
        j = min(int((mu - m0) / (m1 - m0) * cols), cols - 1)
        i = min(int((sigma - s0) / (s1 - s0) * rows), rows - 1)
        return bool(self.membership[i, j])


def _validate(c, delta):
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")


def _raise_for(status, kind, stats_row, lo, hi):
    if status == K.EMPTY:
        raise NumericalAnomaly(f"{kind.name}: confidence set is numerically empty",
                               {"stats": stats_row.tolist(), "argmin": lo})
    if status == K.NON_UNIMODAL:
        raise NumericalAnomaly(f"{kind.name}: level function is not unimodal along the search",
                               {"stats": stats_row.tolist(), "bounds": (lo, hi)})


def _integer_bounds(lo, hi):
    # discrete chi-square sets live on k = 1, 2, ...
    lo = max(1.0, math.ceil(lo)) if np.isfinite(lo) else 1.0
    hi = math.floor(hi) if np.isfinite(hi) else np.inf
    return lo, hi


def boundary_1d(kind, stats, c, delta):
    """(lower, upper) of the confidence set; unbounded sides are +-inf or the domain edge."""
    _validate(c, delta)
    if kind.dim != 1:
        raise ValueError("boundary_1d needs a one-dimensional family")
    st = stats.as_array()
    u0 = K.guess_u(kind.code, st, float(kind.hyper)) if stats.n > 0 else 0.0
    lo, hi, status = K.boundary_1d(kind.code, st, float(kind.hyper), float(c), math.log(1.0 / delta), u0, _TABLE)
    _raise_for(status, kind, st, lo, hi)
    if kind.code == K.CHI2_DISCRETE:
        lo, hi = _integer_bounds(lo, hi)
    return float(lo), float(hi)


def running_intersection(env):
    """Prefix max of the lower bounds and prefix min of the upper bounds."""
    return Envelope(np.maximum.accumulate(np.asarray(env.lower, dtype=float)),
                    np.minimum.accumulate(np.asarray(env.upper, dtype=float)))


def envelope_from_stats(kind, stats, c, delta, intersect=True):
    """Envelope for a (N, 6) array of cumulative statistics."""
    _validate(c, delta)
    stats = np.ascontiguousarray(stats, dtype=float)
    lo, hi, status = K.envelope(kind.code, stats, float(kind.hyper), float(c), math.log(1.0 / delta), _TABLE)
    if status != K.OK:
        # locate the offending row for the diagnostics
        for row in stats:
            boundary_1d(kind, SuffStats.from_array(row), c, delta)
    if kind.code == K.CHI2_DISCRETE:
        pairs = [_integer_bounds(a, b) for a, b in zip(lo, hi)]
        lo = np.array([p[0] for p in pairs])
        hi = np.array([p[1] for p in pairs])
    env = Envelope(lo, hi)
    return running_intersection(env) if intersect else env


def envelope(kind, xs, c=1.0, delta=0.05, intersect=True):
    """Envelope for the observation sequence ``xs``."""
    return envelope_from_stats(kind, cumulative_stats(kind, xs), c, delta, intersect)


def first_exit(kind, stats, c, delta, p_true):
    """First index n (1-based) at which p_true leaves the set, or 0 if it never does.

    For interval-valued sets this is also the first exit from the running
    intersection, since a point leaves the intersection exactly when it
    leaves one of the sets.
    """
    _validate(c, delta)
    kind.check_param(p_true)
    ld = math.log(1.0 / delta)
    if kind.dim == 2:
        mu, sigma = p_true
        vals = level_2d_rows(stats, c, delta, mu, sigma)
        out = np.nonzero(vals > 0)[0]
        return int(out[0] + 1) if out.size else 0
    idx = K.first_exit(kind.code, np.ascontiguousarray(stats, dtype=float), float(kind.hyper),
                       float(c), ld, float(p_true), _TABLE)
    return int(idx + 1)


def level_2d_rows(stats, c, delta, mu, sigma):
    """Gaussian2D level function at one (mu, sigma) for every row of a statistics array."""
    stats = np.atleast_2d(stats)
    n, s, q = stats[:, 0], stats[:, 1], stats[:, 2]
    out = np.full(n.shape, -math.log(1.0 / delta))
    pos = n > 0
    n, s, q = n[pos], s[pos], q[pos]
    zmu = (q - 2.0 * mu * s + n * mu * mu) / sigma ** 2
    zhat = (q - s * s / n) / sigma ** 2
    arg = n / (n + c) * zhat + c / (n + c) * zmu + c
    lg = np.vectorize(math.lgamma)
    const = (n / 2 * math.log(2.0) + (c / 2 + 2) * math.log(c) - 0.5 * np.log(n + c)
             - math.lgamma((c + 3) / 2) + lg((n + c + 3) / 2))
    out[pos] = 0.5 * zmu - (n + c + 3) / 2 * np.log(arg) + const - math.log(1.0 / delta)
    return out


def confset_2d(stats, c=1.0, delta=0.05, box=((-2.0, 4.0), (0.1, 4.0)), resolution=(1024, 1024)):
    """Gaussian2D confidence set on the cell centres of a uniform grid over ``box``."""
    _validate(c, delta)
    (m0, m1), (s0, s1) = box
    rows, cols = resolution
    if rows < 2 or cols < 2:
        raise ValueError(f"resolution must be at least 2x2, got {resolution}")
    if not (s0 > 0 and s1 > s0 and m1 > m0):
        raise DomainError(f"invalid box {box}; sigma range must be positive")
    mu = m0 + (np.arange(cols) + 0.5) * (m1 - m0) / cols
    sigma = s0 + (np.arange(rows) + 0.5) * (s1 - s0) / rows
    member = level_function_2d(stats, c, delta, mu[None, :], sigma[:, None]) <= 0.0
    edge = bool(member[0].any() or member[-1].any() or member[:, 0].any() or member[:, -1].any())
    if edge and stats.n > 0:
        warnings.warn("2-D confidence set touches the grid box; enlarge the box", RuntimeWarning, stacklevel=2)
    return ConfSet2D(box, (rows, cols), mu, sigma, member, edge)


# --------------------------------------------------------------------------- #
# tuning the regularisation c

_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def _width(kind, stats, c, delta):
    lo, hi = boundary_1d(kind, stats, c, delta)
    return hi - lo


def _golden_min(f, a, b, tol=1e-4):
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 < f2 else (x2, f2)


def tune_c(kind, stats, delta=0.05, c_range=(0.01, 100.0)):
    """Regularisation minimising the realised interval width at the given statistics.

    Golden-section search over log c.  Returns ``(c_star, width)``.
    """
    if stats.n < 1:
        raise ValueError("tune_c needs at least one observation")
    lo, hi = math.log(c_range[0]), math.log(c_range[1])
    f = lambda lc: _width(kind, stats, math.exp(lc), delta)
    lc, w = _golden_min(f, lo, hi)
    if not math.isfinite(w):
        warnings.warn("interval is unbounded for every c in the search range", RuntimeWarning, stacklevel=2)
    elif abs(f(lo) - w) < 1e-9 and abs(f(hi) - w) < 1e-9:
        warnings.warn("interval width is flat in c over the search range", RuntimeWarning, stacklevel=2)
    return math.exp(lc), w


def gaussian_mean_c_star(n, delta, sigma=1.0):
    """c minimising the (data-free) GaussianMean width at sample size n, by golden section."""
    ld = math.log(1.0 / delta)
    width = lambda lc: math.sqrt((n + math.exp(lc)) * (ld + 0.5 * math.log((n + math.exp(lc)) / math.exp(lc))))
    lc, _ = _golden_min(width, math.log(1e-6), math.log(1e6), tol=1e-10)
    return math.exp(lc)
