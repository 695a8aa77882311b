"""Concrete families: sufficient statistics, closed-form gains and level functions.

Each :class:`FamilyKind` is parameterised in user-facing terms (a mean,
scale, rate, shape or degrees of freedom) and knows how to map that to the
natural parameter used by :mod:`bregcs.family_core`.
"""
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from . import family_core as fc
from . import specfun
from .errors import DomainError, SupportError, TruncationWarning

GAUSSIAN_2D = 10

_CODES = {
    "GaussianMean": K.GAUSS_MEAN,
    "GaussianVariance": K.GAUSS_VAR,
    "Bernoulli": K.BERNOULLI,
    "Exponential": K.EXPONENTIAL,
    "Gamma": K.GAMMA,
    "Weibull": K.WEIBULL,
    "Pareto": K.PARETO,
    "Poisson": K.POISSON,
    "ChiSquare": K.CHI2_CONTINUOUS,
    "Gaussian2D": GAUSSIAN_2D,
}

_TABLE = K.lgamma_half_table()


@dataclass(frozen=True)
class FamilyKind:
    """A family with its fixed hyper-parameters.

    ``hyper`` holds sigma (GaussianMean), mu (GaussianVariance) or the shape
    k (Gamma, Weibull); ``mixture`` only matters for ChiSquare.
    """

    name: str
    hyper: float = 0.0
    mixture: str = "continuous"

    def __post_init__(self):
        if self.name not in _CODES:
            raise ValueError(f"unknown family {self.name!r}; choose from {sorted(_CODES)}")
        if self.name in ("GaussianMean", "Gamma", "Weibull") and not self.hyper > 0:
            raise DomainError(f"{self.name} needs a positive hyper-parameter, got {self.hyper}")
        if self.mixture not in ("continuous", "discrete"):
            raise ValueError(f"mixture must be 'continuous' or 'discrete', got {self.mixture!r}")

    @property
    def code(self):
        if self.name == "ChiSquare" and self.mixture == "discrete":
            return K.CHI2_DISCRETE
        return _CODES[self.name]

    @property
    def dim(self):
        return 2 if self.name == "Gaussian2D" else 1

    def spec(self):
        """The matching :class:`bregcs.family_core.FamilySpec`."""
        name = self.name
        if name == "GaussianMean":
            return fc.gaussian_mean(self.hyper)
        if name == "GaussianVariance":
            return fc.gaussian_variance(self.hyper)
        if name == "Gamma":
            return fc.gamma_shape(self.hyper)
        if name == "Weibull":
            return fc.weibull_shape(self.hyper)
        if name == "ChiSquare":
            return fc.chi_square(self.mixture, K.K_MAX)
        return fc.REGISTRY[name]()

    def to_natural(self, p):
        """Natural parameter for the user-facing parameter ``p``."""
        name = self.name
        if name == "Gaussian2D":
            mu, sigma = p
            return fc.natural_from_moments(mu, sigma)
        p = float(p)
        if name == "GaussianMean":
            return p / self.hyper ** 2
        if name == "GaussianVariance":
            return -0.5 / p ** 2
        if name == "Bernoulli":
            return math.log(p) - math.log1p(-p)
        if name in ("Exponential", "Gamma"):
            return -1.0 / p
        if name == "Weibull":
            return -p ** -self.hyper
        if name == "Pareto":
            return -p - 1.0
        if name == "Poisson":
            return math.log(p)
        return 0.5 * p - 1.0

    def mean_stat(self, stats):
        """Sample mean of the sufficient statistic F(X), as used by family_core."""
        n = stats.n
        if n == 0:
            return 0.0 if self.dim == 1 else np.zeros(2)
        name = self.name
        if name == "Gaussian2D":
            return np.array([stats.s / n, stats.q / n])
        if name == "GaussianVariance":
            return stats.q / n
        if name == "Weibull":
            return stats.sk / n
        if name == "Pareto":
            return stats.l / n
        if name == "ChiSquare":
            return stats.kk / n + math.log(2.0)
        return stats.s / n

    def check_param(self, p):
        name = self.name
        if name == "Gaussian2D":
            mu, sigma = p
            ok = np.isfinite(mu) and sigma > 0
        elif name == "GaussianMean":
            ok = np.isfinite(p)
        elif name == "Bernoulli":
            ok = 0.0 < p < 1.0
        else:
            ok = 0.0 < p < np.inf
        if not ok:
            raise DomainError(f"parameter {p!r} outside the open parameter set of {name}")


@dataclass
class SuffStats:
    """Running sums of the sufficient statistics; unused fields stay at 0."""

    n: int = 0
    s: float = 0.0
    q: float = 0.0
    l: float = 0.0
    kk: float = 0.0
    sk: float = 0.0

    def as_array(self):
        return np.array([self.n, self.s, self.q, self.l, self.kk, self.sk], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(int(round(a[0])), float(a[1]), float(a[2]), float(a[3]), float(a[4]), float(a[5]))


def _bad_support(kind, xs):
    """Boolean mask of observations outside the support of ``kind``."""
    xs = np.asarray(xs, dtype=float)
    bad = ~np.isfinite(xs)
    name = kind.name
    with np.errstate(invalid="ignore"):
        if name == "Bernoulli":
            bad |= (xs != 0) & (xs != 1)
        elif name in ("Exponential", "Gamma", "Weibull", "ChiSquare"):
            bad |= ~(xs > 0)
        elif name == "Pareto":
            bad |= ~(xs >= 1)
        elif name == "Poisson":
            bad |= (xs < 0) | (xs != np.floor(xs))
    return bad


def _check_support(kind, xs):
    bad = _bad_support(kind, xs)
    if np.any(bad):
        x = np.atleast_1d(xs)[np.argmax(np.atleast_1d(bad))]
        raise SupportError(f"{kind.name}: observation {x!r} outside the support", x)


def update_stats(kind, stats, x):
    """Return new statistics with observation ``x`` folded in."""
    _check_support(kind, x)
    x = float(x)
    name = kind.name
    out = replace(stats, n=stats.n + 1)
    if name in ("GaussianMean", "Bernoulli", "Exponential", "Gamma", "Poisson"):
        out.s += x
    elif name == "GaussianVariance":
        out.q += (x - kind.hyper) ** 2
    elif name == "Gaussian2D":
        out.s += x
        out.q += x * x
    elif name == "Weibull":
        out.sk += x ** kind.hyper
    elif name == "Pareto":
        out.l += math.log(x)
    else:
        out.kk += math.log(x / 2.0)
    return out


def cumulative_stats(kind, xs):
    """Array of shape (len(xs), 6): statistics after each prefix of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    _check_support(kind, xs)
    name = kind.name
    m = xs.size
    out = np.zeros((m, 6))
    out[:, 0] = np.arange(1, m + 1)
    if name in ("GaussianMean", "Bernoulli", "Exponential", "Gamma", "Poisson"):
        out[:, 1] = np.cumsum(xs)
    elif name == "GaussianVariance":
        out[:, 2] = np.cumsum((xs - kind.hyper) ** 2)
    elif name == "Gaussian2D":
        out[:, 1] = np.cumsum(xs)
        out[:, 2] = np.cumsum(xs * xs)
    elif name == "Weibull":
        out[:, 5] = np.cumsum(xs ** kind.hyper)
    elif name == "Pareto":
        out[:, 3] = np.cumsum(np.log(xs))
    else:
        out[:, 4] = np.cumsum(np.log(xs / 2.0))
    return out


# --------------------------------------------------------------------------- #
# integrals appearing in the Poisson and Chi-square rows

def _poisson_log_I_quad(a, b, steps=4000):
    # trapezoid in theta around the mode log(b/a); the integrand is log-concave
    mode = math.log(b / a)
    sd = 1.0 / math.sqrt(b)
    left, right = mode - 12.0 * sd, mode + 12.0 * sd

    def f(t):
        return -a * np.exp(t) + b * t

    top = f(mode)
    while f(left) > top - 60.0:
        left -= 4.0 * sd
    while f(right) > top - 60.0:
        right += 4.0 * sd
    t = np.linspace(left, right, steps + 1)
    h = (right - left) / steps
    terms = f(t) + math.log(h)
    terms[0] -= math.log(2.0)
    terms[-1] -= math.log(2.0)
    return specfun.log_sum_exp(terms)


def poisson_log_I(a, b, method="analytic", check=False):
    """log of the integral over R of exp(-a e^theta + b theta).

    ``method="analytic"`` uses the substitution u = a e^theta, giving
    log Gamma(b) - b log a.  ``method="quadrature"`` integrates numerically.
    With ``check=True`` both are computed and must agree to 1e-6 relative.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"poisson_log_I needs a > 0 and b > 0, got a={a}, b={b}")
    exact = math.lgamma(b) - b * math.log(a)
    if method == "quadrature":
        return _poisson_log_I_quad(a, b)
    if check:
        quad = _poisson_log_I_quad(a, b)
        if abs(math.expm1(quad - exact)) > 1e-6:
            raise AssertionError(f"Poisson I({a}, {b}) quadrature {quad} disagrees with {exact}")
    return exact


def chisquare_log_J(a, b, mixture="continuous", k_max=K.K_MAX):
    """log J(a, b) with J summed over k = 1..k_max or integrated over k > 0."""
    if not a > 0:
        raise DomainError(f"chisquare_log_J needs a > 0, got {a}")
    if mixture == "discrete":
        table = _TABLE if k_max == K.K_MAX else K.lgamma_half_table(k_max)
        total = float(K.log_J_discrete(a, b, table))
        last = -a * table[-1] + 0.5 * b * k_max
        if last - total > math.log(1e-12):
            warnings.warn(f"J({a}, {b}) truncated at k_max={k_max} with relative tail {math.exp(last - total):.2e}",
                          TruncationWarning, stacklevel=2)
        return total
    if mixture == "continuous":
        return float(K.log_J_continuous(a, b, K.J_NODES))
    raise ValueError(f"unknown mixture {mixture!r}")


# --------------------------------------------------------------------------- #
# closed-form information gains

def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _entropy(m):
    return -m * math.log(m) - (1.0 - m) * math.log1p(-m)


def _gain_gamma_type(ratio_sum, n, c, k):
    # log-partition -k log(-theta) up to a shift of theta; ratio_sum = S/lambda0 + ck
    nk = (n + c) * k
    ck = c * k
    return (math.log(ratio_sum) - math.log(nk) - n * k + math.lgamma(ck + 1.0) - math.lgamma(nk + 1.0)
            - (ck + 1.0) * math.log(ck) + (nk + 1.0) * math.log(nk))


def _z(stats, mu, sigma):
    return (stats.q - 2.0 * mu * stats.s + stats.n * mu * mu) / sigma ** 2


def information_gain_closed(kind, stats, c, p0):
    """Closed-form Bregman information gain at the reference parameter ``p0``.

    ``p0`` is in user-facing terms, e.g. (mu0, sigma0) for Gaussian2D.
    """
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    kind.check_param(p0)
    n = stats.n
    if n == 0:
        return 0.0
    name = kind.name
    if name == "GaussianMean":
        return 0.5 * math.log((n + c) / c)
    if name == "GaussianVariance":
        # k = 1/2 case of the shape family with lambda = 2 sigma^2
        return _gain_gamma_type(stats.q / (2.0 * p0 ** 2) + 0.5 * c, n, c, 0.5)
    if name == "Bernoulli":
        mt = (stats.s + c * p0) / (n + c)
        return (c * _entropy(p0) - (n + c) * _entropy(mt) + _log_beta(c * p0, c * (1.0 - p0))
                - _log_beta((n + c) * mt, (n + c) * (1.0 - mt)))
    if name == "Exponential":
        return _gain_gamma_type(stats.s / p0 + c, n, c, 1.0)
    if name == "Gamma":
        return _gain_gamma_type(stats.s / p0 + c * kind.hyper, n, c, kind.hyper)
    if name == "Weibull":
        return _gain_gamma_type(stats.sk / p0 ** kind.hyper + c, n, c, 1.0)
    if name == "Pareto":
        return _gain_gamma_type(p0 * stats.l + c, n, c, 1.0)
    if name == "Poisson":
        th0 = math.log(p0)
        lam_t = (stats.s + c * p0) / (n + c)
        th_t = math.log(lam_t)
        return (c * (1.0 - th0) * p0 - (n + c) * (1.0 - th_t) * lam_t
                + poisson_log_I(c, c * p0) - poisson_log_I(n + c, stats.s + c * p0))
    if name == "ChiSquare":
        h0 = 0.5 * p0
        psi0 = specfun.digamma(h0)
        ht = specfun.inverse_digamma((stats.kk + c * psi0) / (n + c))
        psit = (stats.kk + c * psi0) / (n + c)
        return (c * (math.lgamma(h0) - h0 * psi0) - (n + c) * (math.lgamma(ht) - ht * psit)
                + chisquare_log_J(c, c * psi0, kind.mixture) - chisquare_log_J(n + c, stats.kk + c * psi0, kind.mixture))
    mu0, s0 = p0
    arg = (stats.q - stats.s ** 2 / n) / s0 ** 2 * n / (n + c) + c / (n + c) * _z(stats, mu0, s0) + c
    f = ((n + c + 1) / 2 * math.log(n + c) - (c / 2 + 2) * math.log(c) - n / 2 * (1 + math.log(2.0))
         + math.lgamma((c + 3) / 2) - math.lgamma((n + c + 3) / 2))
    return 1.5 * math.log(arg) + f


# --------------------------------------------------------------------------- #
# level functions

def level_function_2d(stats, c, delta, mu, sigma):
    """Gaussian2D level function, vectorised over broadcastable ``mu`` and ``sigma``."""
    n = stats.n
    ld = math.log(1.0 / delta)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if n == 0:
        return np.full(np.broadcast(mu, sigma).shape, -ld)
    zmu = (stats.q - 2.0 * mu * stats.s + n * mu * mu) / sigma ** 2
    zhat = (stats.q - stats.s ** 2 / n) / sigma ** 2
    arg = n / (n + c) * zhat + c / (n + c) * zmu + c
    const = (n / 2 * math.log(2.0) + (c / 2 + 2) * math.log(c) - 0.5 * math.log(n + c)
             - math.lgamma((c + 3) / 2) + math.lgamma((n + c + 3) / 2))
    return 0.5 * zmu - (n + c + 3) / 2 * np.log(arg) + const - ld


def level_function(kind, stats, c, delta, p0):
    """Closed-form level function at the candidate ``p0``; members have value <= 0."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")
    kind.check_param(p0)
    if kind.name == "Gaussian2D":
        return float(level_function_2d(stats, c, delta, p0[0], p0[1]))
    u = float(K.u_from_param(kind.code, float(p0)))
    return float(K.level_u(kind.code, stats.as_array(), float(kind.hyper), float(c),
                           math.log(1.0 / delta), u, _TABLE))


def level_function_numeric(kind, stats, c, delta, p0, steps=None):
    """Level function assembled from family_core primitives alone (an oracle)."""
    kind.check_param(p0)
    return fc.level_function_generic(kind.spec(), kind.mean_stat(stats), stats.n, c, delta,
                                     kind.to_natural(p0), steps)


def information_gain_numeric(kind, stats, c, p0, steps=None):
    """Numeric gain at the user-facing reference ``p0`` (wrapper over family_core)."""
    kind.check_param(p0)
    return fc.information_gain_numeric(kind.spec(), kind.mean_stat(stats), stats.n, c,
                                       kind.to_natural(p0), steps)
