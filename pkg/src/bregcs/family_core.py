"""Exponential-family abstraction and quadrature oracles.

A family is described by its log-partition ``L`` over natural parameters,
its gradient (the mean map) and the inverse of the gradient.  Everything in
this module works from those three maps only, so it doubles as an
independent check on the per-family closed forms in :mod:`bregcs.families`.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import ConvergenceError, DomainError, QuadratureWarning

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# integrand drop (in nats) beyond which a quadrature window is considered closed
_WINDOW_DROP = 60.0
_BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class FamilySpec:
    """Exponential family in natural parameters.

    ``support`` lists the open interval ``(lo, hi)`` of every coordinate of
    the natural parameter domain (the domain is their product).  ``measure``
    is ``"lebesgue"`` or ``"counting"``; with a counting measure the mixture
    integrals run over ``counting_nodes`` instead.
    """

    name: str
    dim: int
    log_partition: object
    grad: object
    grad_inverse: object
    support: tuple
    hess: object = None
    measure: str = "lebesgue"
    counting_nodes: object = None
    params: dict = field(default_factory=dict)

    def in_domain(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            return False
        for t, (lo, hi) in zip(theta, self.support):
            if not (lo < t < hi):
                return False
        return True

    def check(self, theta, what="theta"):
        if not self.in_domain(theta):
            raise DomainError(f"{what}={theta!r} outside the natural domain of {self.name}")

    def hessian(self, theta):
        if self.hess is not None:
            return self.hess(theta)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        h = 1e-6 * np.maximum(1.0, np.abs(theta))
        out = np.empty((self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = h[j]
            out[:, j] = (np.atleast_1d(self.grad(_shape(self, theta + e)))
                         - np.atleast_1d(self.grad(_shape(self, theta - e)))) / (2 * h[j])
        return out if self.dim > 1 else float(out[0, 0])


def _shape(family, theta):
    theta = np.asarray(theta, dtype=float)
    return float(theta.reshape(-1)[0]) if family.dim == 1 else theta


@dataclass(frozen=True)
class RegularizedEstimate:
    theta: object
    n: float
    c: float


# --------------------------------------------------------------------------- #
# concrete log-partition functions

def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def gaussian_mean(sigma=1.0):
    """N(mu, sigma^2) with sigma known; theta = mu / sigma^2, F(x) = x."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    s2 = sigma * sigma
    return FamilySpec(
        "GaussianMean", 1,
        lambda t: 0.5 * s2 * np.square(t),
        lambda t: s2 * t,
        lambda m: m / s2,
        ((-np.inf, np.inf),),
        hess=lambda t: s2,
        params={"sigma": sigma},
    )


def gaussian_variance(mu=0.0):
    """N(mu, sigma^2) with mu known; theta = -1/(2 sigma^2), F(x) = (x - mu)^2."""
    return FamilySpec(
        "GaussianVariance", 1,
        lambda t: -0.5 * np.log(-2.0 * t),
        lambda t: -0.5 / t,
        lambda m: -0.5 / m,
        ((-np.inf, 0.0),),
        hess=lambda t: 0.5 / (t * t),
        params={"mu": mu},
    )


def bernoulli():
    """Bernoulli(mu); theta = logit(mu), F(x) = x."""
    return FamilySpec(
        "Bernoulli", 1,
        lambda t: np.logaddexp(0.0, t),
        _sigmoid,
        lambda m: np.log(m) - np.log1p(-m),
        ((-np.inf, np.inf),),
        hess=lambda t: _sigmoid(t) * _sigmoid(-t),
    )


def exponential():
    """Exponential with mean mu; theta = -1/mu, F(x) = x."""
    return FamilySpec(
        "Exponential", 1,
        lambda t: -np.log(-t),
        lambda t: -1.0 / t,
        lambda m: -1.0 / m,
        ((-np.inf, 0.0),),
        hess=lambda t: 1.0 / (t * t),
    )


def gamma_shape(k):
    """Gamma(shape k known, scale lambda); theta = -1/lambda, F(x) = x."""
    if not k > 0:
        raise DomainError(f"shape k must be positive, got {k}")
    return FamilySpec(
        "Gamma", 1,
        lambda t: -k * np.log(-t),
        lambda t: -k / t,
        lambda m: -k / m,
        ((-np.inf, 0.0),),
        hess=lambda t: k / (t * t),
        params={"k": k},
    )


def weibull_shape(k):
    """Weibull(shape k known, scale lambda); theta = -lambda^-k, F(x) = x^k."""
    if not k > 0:
        raise DomainError(f"shape k must be positive, got {k}")
    return FamilySpec(
        "Weibull", 1,
        lambda t: -np.log(-t),
        lambda t: -1.0 / t,
        lambda m: -1.0 / m,
        ((-np.inf, 0.0),),
        hess=lambda t: 1.0 / (t * t),
        params={"k": k},
    )


def pareto():
    """Pareto(alpha) with unit scale; theta = -alpha - 1, F(x) = log x."""
    return FamilySpec(
        "Pareto", 1,
        lambda t: -np.log(-t - 1.0),
        lambda t: -1.0 / (t + 1.0),
        lambda m: -1.0 - 1.0 / m,
        ((-np.inf, -1.0),),
        hess=lambda t: 1.0 / np.square(t + 1.0),
    )


def poisson():
    """Poisson(lambda); theta = log lambda, F(x) = x."""
    return FamilySpec(
        "Poisson", 1,
        np.exp,
        np.exp,
        np.log,
        ((-np.inf, np.inf),),
        hess=np.exp,
    )


def _lgamma(x):
    if np.ndim(x) == 0:
        return math.lgamma(float(x))
    return specfun.lgamma_array(np.asarray(x, dtype=float))


def _digamma(x):
    if np.ndim(x) == 0:
        return specfun.digamma(float(x))
    return specfun.digamma_array(np.asarray(x, dtype=float))


def _inv_digamma(y):
    if np.ndim(y) == 0:
        return specfun.inverse_digamma(float(y))
    return np.array([specfun.inverse_digamma(v) for v in np.ravel(y)]).reshape(np.shape(y))


def chi_square(mixture="continuous", k_max=2000):
    """Chi-square(k); theta = k/2 - 1, F(x) = log x.

    With ``mixture="discrete"`` the mixture measure is the counting measure
    on integer degrees of freedom ``k = 1..k_max``.
    """
    if mixture not in ("continuous", "discrete"):
        raise ValueError(f"mixture must be 'continuous' or 'discrete', got {mixture!r}")
    log2 = math.log(2.0)
    nodes = None
    measure = "lebesgue"
    if mixture == "discrete":
        nodes = np.arange(1, k_max + 1) / 2.0 - 1.0
        measure = "counting"
    return FamilySpec(
        "ChiSquare", 1,
        lambda t: (t + 1.0) * log2 + _lgamma(t + 1.0),
        lambda t: log2 + _digamma(t + 1.0),
        lambda m: _inv_digamma(m - log2) - 1.0,
        ((-1.0, np.inf),),
        hess=lambda t: specfun._trigamma(float(t) + 1.0),
        measure=measure,
        counting_nodes=nodes,
        params={"mixture": mixture, "k_max": k_max},
    )


def gaussian_2d():
    """N(mu, sigma^2) with both unknown; theta = (mu/sigma^2, -1/(2 sigma^2)), F(x) = (x, x^2)."""

    def L(t):
        t = np.asarray(t, dtype=float)
        return -t[0] ** 2 / (4.0 * t[1]) - 0.5 * np.log(-2.0 * t[1])

    def grad(t):
        t1, t2 = float(t[0]), float(t[1])
        return np.array([-t1 / (2.0 * t2), t1 * t1 / (4.0 * t2 * t2) - 0.5 / t2])

    def grad_inverse(m):
        var = float(m[1]) - float(m[0]) ** 2
        if not var > 0:
            raise DomainError(f"mean parameter {m!r} has non-positive variance")
        return np.array([float(m[0]) / var, -0.5 / var])

    def hess(t):
        t1, t2 = float(t[0]), float(t[1])
        return np.array([
            [-0.5 / t2, t1 / (2.0 * t2 * t2)],
            [t1 / (2.0 * t2 * t2), -t1 * t1 / (2.0 * t2 ** 3) + 0.5 / (t2 * t2)],
        ])

    return FamilySpec("Gaussian2D", 2, L, grad, grad_inverse,
                      ((-np.inf, np.inf), (-np.inf, 0.0)), hess=hess)


def natural_from_moments(mu, sigma):
    """Natural parameter of N(mu, sigma^2) in the two-parameter family."""
    return np.array([mu / sigma ** 2, -0.5 / sigma ** 2])


# --------------------------------------------------------------------------- #
# generic operations

def _dot(a, b):
    return float(np.dot(np.atleast_1d(a), np.atleast_1d(b)))


def bregman_divergence(family, theta_prime, theta):
    """B_L(theta', theta) = L(theta') - L(theta) - <theta' - theta, grad L(theta)>."""
    family.check(theta_prime, "theta_prime")
    family.check(theta, "theta")
    diff = np.asarray(theta_prime, dtype=float) - np.asarray(theta, dtype=float)
    val = float(family.log_partition(theta_prime)) - float(family.log_partition(theta)) \
        - _dot(diff, family.grad(theta))
    return max(val, 0.0)


def regularized_estimate(family, mean_stat, n, c, theta0):
    """theta_{n,c}(theta0): invert grad L at the c-weighted blend of data and theta0."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    family.check(theta0, "theta0")
    if n == 0:
        return RegularizedEstimate(theta0, 0, c)
    m0 = np.asarray(family.grad(theta0), dtype=float)
    m = (n * np.asarray(mean_stat, dtype=float) + c * m0) / (n + c)
    theta = family.grad_inverse(m if family.dim > 1 else float(m))
    if not family.in_domain(theta):
        raise RuntimeError(f"regularized estimate {theta!r} left the domain of {family.name}")
    return RegularizedEstimate(theta, n, c)


def log_mgf(family, theta, lam):
    """log E_theta exp(<lam, F(X) - E F(X)>) = L(theta + lam) - L(theta) - <lam, grad L(theta)>."""
    family.check(theta, "theta")
    shifted = np.asarray(theta, dtype=float) + np.asarray(lam, dtype=float)
    if not family.in_domain(shifted):
        raise DomainError(f"theta + lambda = {shifted!r} outside the domain of {family.name}")
    shifted = _shape(family, shifted)
    return float(family.log_partition(shifted)) - float(family.log_partition(theta)) \
        - _dot(lam, family.grad(theta))


# coordinate maps from an unconstrained u to an interval (lo, hi)

def _to_theta(u, lo, hi):
    if np.isinf(lo) and np.isinf(hi):
        return u, np.zeros_like(u)
    if np.isinf(hi):
        return lo + np.exp(u), u
    if np.isinf(lo):
        return hi - np.exp(u), u
    # not needed by the registered families
    s = 1.0 / (1.0 + np.exp(-u))
    return lo + (hi - lo) * s, np.log(hi - lo) + np.log(s) + np.log1p(-s)


def _to_u(theta, lo, hi):
    if np.isinf(lo) and np.isinf(hi):
        return theta
    if np.isinf(hi):
        return math.log(theta - lo)
    if np.isinf(lo):
        return math.log(hi - theta)
    s = (theta - lo) / (hi - lo)
    return math.log(s) - math.log1p(-s)


def _log_mixture_1d(family, a, centre, steps):
    """log of the integral of exp(-a B(theta', centre)) d theta' over the domain."""
    L = family.log_partition
    L_c = float(L(centre))
    g_c = float(family.grad(centre))

    def integrand(theta):
        # theta can round onto the domain edge where L is infinite
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            val = -a * (L(theta) - L_c - (theta - centre) * g_c)
        return np.where(np.isfinite(val), val, -np.inf)

    if family.measure == "counting":
        vals = integrand(family.counting_nodes)
        total = specfun.log_sum_exp(vals)
        if vals[-1] - total > math.log(_BOUNDARY_TOL):
            warnings.warn("counting-measure mixture truncated with non-negligible tail mass",
                          QuadratureWarning, stacklevel=3)
        return total

    lo, hi = family.support[0]

    def log_f(u):
        theta, logjac = _to_theta(u, lo, hi)
        return integrand(theta) + logjac

    u0 = _to_u(centre, lo, hi)
    curv = a * float(family.hessian(centre))
    if np.isinf(lo) and np.isinf(hi):
        dtheta_du = 1.0
    else:
        dtheta_du = abs(centre - (lo if np.isfinite(lo) else hi))
    scale = 1.0 / (math.sqrt(curv) * dtheta_du)
    left, right = u0 - 12.0 * scale, u0 + 12.0 * scale
    cap = 800.0 * max(1.0, scale) + abs(u0)
    coarse = 801
    for _ in range(200):
        u = np.linspace(left, right, coarse)
        v = log_f(u)
        top = np.max(v)
        grew = False
        if v[0] > top - _WINDOW_DROP and left > u0 - cap:
            left -= (right - left)
            grew = True
        if v[-1] > top - _WINDOW_DROP and right < u0 + cap:
            right += (right - left)
            grew = True
        if not grew:
            break
    # shrink to the region carrying the mass, keeping one coarse cell of margin
    keep = np.nonzero(v > top - _WINDOW_DROP)[0]
    i0, i1 = max(keep[0] - 1, 0), min(keep[-1] + 1, coarse - 1)
    left, right = u[i0], u[i1]
    u = np.linspace(left, right, steps + 1)
    v = log_f(u)
    h = (right - left) / steps
    terms = v + math.log(h)
    terms[0] -= math.log(2.0)
    terms[-1] -= math.log(2.0)
    total = specfun.log_sum_exp(terms)
    if max(v[0], v[-1]) + math.log(h) - total > math.log(_BOUNDARY_TOL):
        warnings.warn(f"{family.name}: mixture integrand not negligible at the quadrature window edge",
                      QuadratureWarning, stacklevel=3)
    return total


def _log_mixture_2d(family, a, centre, steps):
    """Gaussian2D mixture integral, iterated in (mu', log sigma') coordinates."""
    m = family.grad(centre)
    mu_c = float(m[0])
    var_c = float(m[1]) - mu_c ** 2
    sd_c = math.sqrt(var_c)
    v0 = math.log(sd_c)

    def kl_rows(v):
        # closed-form marginal is avoided: integrate the mu' direction numerically too
        sig = np.exp(v)
        out = np.empty(v.size)
        for i, (vi, si) in enumerate(zip(v, sig)):
            w = 12.0 * si / math.sqrt(a)
            mu = np.linspace(mu_c - w, mu_c + w, steps + 1)
            theta = np.stack([mu / si ** 2, np.full_like(mu, -0.5 / si ** 2)])
            L_prime = -theta[0] ** 2 / (4.0 * theta[1]) - 0.5 * np.log(-2.0 * theta[1])
            g = m
            tc = np.asarray(centre, dtype=float)
            b = L_prime - float(family.log_partition(tc)) \
                - (theta[0] - tc[0]) * g[0] - (theta[1] - tc[1]) * g[1]
            terms = -a * b + math.log(2 * w / steps)
            terms[0] -= math.log(2.0)
            terms[-1] -= math.log(2.0)
            # Jacobian of (mu', sigma') -> theta' is sigma'^-5, times sigma' for log sigma'
            out[i] = specfun.log_sum_exp(terms) - 4.0 * vi
        return out

    scale = 1.0 / math.sqrt(2.0 * a)
    left, right = v0 - 12.0 * scale, v0 + 12.0 * scale
    coarse = 201
    for _ in range(100):
        v = np.linspace(left, right, coarse)
        vals = kl_rows(v)
        top = vals.max()
        grew = False
        if vals[0] > top - _WINDOW_DROP:
            left -= 0.5 * (right - left)
            grew = True
        if vals[-1] > top - _WINDOW_DROP:
            right += 0.5 * (right - left)
            grew = True
        if not grew:
            break
    keep = np.nonzero(vals > top - _WINDOW_DROP)[0]
    left, right = v[max(keep[0] - 1, 0)], v[min(keep[-1] + 1, coarse - 1)]
    v = np.linspace(left, right, steps + 1)
    vals = kl_rows(v)
    h = (right - left) / steps
    terms = vals + math.log(h)
    terms[0] -= math.log(2.0)
    terms[-1] -= math.log(2.0)
    return specfun.log_sum_exp(terms)


def information_gain_numeric(family, mean_stat, n, c, theta0, steps=None):
    """Bregman information gain by direct quadrature of both mixture integrals.

    The integrals run over the natural parameter domain after a change of
    variables to an unconstrained coordinate; the window is sized from the
    local curvature and widened until the integrand has dropped by 60 nats.
    """
    est = regularized_estimate(family, mean_stat, n, c, theta0)
    if n == 0:
        return 0.0
    if family.dim == 1:
        steps = steps or 4000
        prior = _log_mixture_1d(family, c, float(theta0), steps)
        post = _log_mixture_1d(family, n + c, float(est.theta), steps)
    else:
        steps = steps or 400
        prior = _log_mixture_2d(family, c, np.asarray(theta0, dtype=float), steps)
        post = _log_mixture_2d(family, n + c, np.asarray(est.theta, dtype=float), steps)
    return prior - post


def level_function_generic(family, mean_stat, n, c, delta, theta0, steps=None):
    """(n+c) B(theta0, theta_{n,c}(theta0)) - log(1/delta) - gamma_{n,c}(theta0), all numeric.

    Non-positive values mean theta0 belongs to the confidence set.
    """
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")
    if n == 0:
        return -math.log(1.0 / delta)
    est = regularized_estimate(family, mean_stat, n, c, theta0)
    gam = information_gain_numeric(family, mean_stat, n, c, theta0, steps)
    return (n + c) * bregman_divergence(family, theta0, est.theta) - math.log(1.0 / delta) - gam


# --------------------------------------------------------------------------- #
# duality check

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


def _golden_max(f, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * (1.0 + abs(a) + abs(b)) * 0.5:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _line_max(f, tol=1e-10, max_expand=200):
    """Maximise a concave f on R (possibly -inf outside an interval) starting from 0."""
    f0 = f(0.0)
    step = 1e-3
    direction = 0
    if f(step) > f0:
        direction = 1
    elif f(-step) > f0:
        direction = -1
    else:
        return _golden_max(f, -step, step, tol)
    prev, cur = 0.0, direction * step
    fcur = f(cur)
    for _ in range(max_expand):
        nxt = cur + 2.0 * (cur - prev)
        fn = f(nxt)
        if not fn > fcur:
            lo, hi = sorted((prev, nxt))
            return _golden_max(f, lo, hi, tol)
        prev, cur, fcur = cur, nxt, fn
    raise ConvergenceError("line search bracket kept growing", cur)


def dual_gap(family, theta, theta_prime, alpha, tol=1e-10, max_sweeps=500):
    """Both sides of the Bregman duality relation.

    Returns ``(B*_{L,theta'}(alpha (grad L(theta) - grad L(theta'))), B_L(theta', theta_alpha))``
    where the convex conjugate is evaluated by numerical maximisation.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    family.check(theta, "theta")
    family.check(theta_prime, "theta_prime")
    g = np.atleast_1d(np.asarray(family.grad(theta), dtype=float))
    gp = np.atleast_1d(np.asarray(family.grad(theta_prime), dtype=float))
    x = alpha * (g - gp)
    tp = np.atleast_1d(np.asarray(theta_prime, dtype=float))
    Lp = float(family.log_partition(_shape(family, tp)))

    def objective(lam):
        t = tp + lam
        if not family.in_domain(t):
            return -np.inf
        return float(np.dot(lam, x)) - (float(family.log_partition(_shape(family, t))) - Lp - float(np.dot(lam, gp)))

    lam = np.zeros(family.dim)
    best = objective(lam)
    for sweep in range(max_sweeps):
        old = best
        for j in range(family.dim):
            def f(s, j=j):
                trial = lam.copy()
                trial[j] += s
                return objective(trial)
            s, val = _line_max(f, tol)
            if val >= best:
                lam[j] += s
                best = val
        if family.dim == 1 or abs(best - old) <= 1e-15 * max(1.0, abs(best)):
            break
    else:
        raise ConvergenceError("coordinate ascent for the conjugate did not converge", lam)
    theta_alpha = family.grad_inverse(_shape(family, alpha * g + (1 - alpha) * gp))
    return best, bregman_divergence(family, theta_prime, theta_alpha)


REGISTRY = {
    "GaussianMean": gaussian_mean,
    "GaussianVariance": gaussian_variance,
    "Bernoulli": bernoulli,
    "Exponential": exponential,
    "Gamma": gamma_shape,
    "Weibull": weibull_shape,
    "Pareto": pareto,
    "Poisson": poisson,
    "ChiSquare": chi_square,
    "Gaussian2D": gaussian_2d,
}
