"""Compiled level functions and the 1-D boundary search.

Family codes index the closed-form level functions below.  ``st`` is the
sufficient-statistic vector ``[n, s, q, l, kk, sk]``, ``hyp`` the fixed
hyper-parameter (sigma, shape k, or unused), ``ld = log(1/delta)``.
All searches run in an unconstrained coordinate ``u``: identity for the
Gaussian mean, logit for the Bernoulli mean and log for everything else.
"""
import math

import numpy as np

from ._accel import jit
from .specfun import _digamma, _inv_digamma, _trigamma

GAUSS_MEAN = 0
GAUSS_VAR = 1
BERNOULLI = 2
EXPONENTIAL = 3
GAMMA = 4
WEIBULL = 5
PARETO = 6
POISSON = 7
CHI2_DISCRETE = 8
CHI2_CONTINUOUS = 9

K_MAX = 2000
LOG_LO, LOG_HI = -10.0, 10.0
J_NODES = 400

# status codes returned by boundary_1d
OK = 0
EMPTY = 1
NON_UNIMODAL = 2

_GOLD = 0.6180339887498949


def lgamma_half_table(k_max=K_MAX):
    """log Gamma(k/2) for k = 1..k_max."""
    return np.array([math.lgamma(0.5 * k) for k in range(1, k_max + 1)])


@jit
def log_J_discrete(a, b, table):
    """log sum_{k=1}^{K} exp(-a log Gamma(k/2) + b k / 2), walking out from the mode."""
    kmax = table.size
    # summand is log-concave in k; locate the mode by scanning the coarse slope
    best = -np.inf
    arg = 0
    for i in range(kmax):
        v = -a * table[i] + 0.5 * b * (i + 1)
        if v > best:
            best = v
            arg = i
        elif v < best - 60.0:
            break
    acc = 0.0
    i = arg
    while i >= 0:
        v = -a * table[i] + 0.5 * b * (i + 1) - best
        if v < -60.0:
            break
        acc += math.exp(v)
        i -= 1
    i = arg + 1
    while i < kmax:
        v = -a * table[i] + 0.5 * b * (i + 1) - best
        if v < -60.0:
            break
        acc += math.exp(v)
        i += 1
    return best + math.log(acc)


@jit
def _log_j_integrand(a, b, w):
    # integrand of J after k = 2 e^w, including the Jacobian dk = 2 e^w dw
    x = math.exp(w)
    return -a * math.lgamma(x) + b * x + w + 0.6931471805599453


@jit
def log_J_continuous(a, b, nodes):
    """log of the integral over k > 0 of exp(-a log Gamma(k/2) + b k / 2).

    Trapezoid rule in w = log(k/2) on a window centred at the mode and
    widened until the integrand has dropped by 60 nats, restricted to
    [LOG_LO, LOG_HI].
    """
    xs = _inv_digamma(b / a)
    w0 = math.log(xs)
    sd = 1.0 / (math.sqrt(a * _trigamma(xs)) * xs)
    top = _log_j_integrand(a, b, w0)
    left = w0 - 8.0 * sd
    right = w0 + 8.0 * sd
    for _ in range(80):
        if left <= LOG_LO or _log_j_integrand(a, b, left) < top - 60.0:
            break
        left -= 4.0 * sd
    for _ in range(80):
        if right >= LOG_HI or _log_j_integrand(a, b, right) < top - 60.0:
            break
        right += 4.0 * sd
    left = max(left, LOG_LO)
    right = min(right, LOG_HI)
    h = (right - left) / (nodes - 1)
    acc = 0.0
    for i in range(nodes):
        v = _log_j_integrand(a, b, left + i * h) - top
        if i == 0 or i == nodes - 1:
            acc += 0.5 * math.exp(v)
        else:
            acc += math.exp(v)
    return top + math.log(acc * h)


@jit
def log_J(a, b, discrete, table):
    if discrete:
        return log_J_discrete(a, b, table)
    return log_J_continuous(a, b, J_NODES)


@jit
def log_I(a, b):
    """log of the integral over R of exp(-a e^t + b t) = log Gamma(b) - b log a."""
    return math.lgamma(b) - b * math.log(a)


@jit
def param_from_u(code, u):
    if code == GAUSS_MEAN:
        return u
    if code == BERNOULLI:
        if u >= 0:
            return 1.0 / (1.0 + math.exp(-u))
        e = math.exp(u)
        return e / (1.0 + e)
    return math.exp(u)


@jit
def u_from_param(code, p):
    if code == GAUSS_MEAN:
        return p
    if code == BERNOULLI:
        return math.log(p) - math.log1p(-p)
    return math.log(p)


@jit
def u_cap(code):
    if code == GAUSS_MEAN:
        return 1e100
    if code == BERNOULLI:
        return 600.0
    return 300.0


@jit
def _log1pexp(x):
    if x > 30.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@jit
def _gamma_type(ratio_sum, n, c, k, ld):
    # shared shape of the Exponential / Gamma / Weibull / Pareto rows
    nk = (n + c) * k
    ck = c * k
    return (ratio_sum - (nk + 1.0) * math.log(ratio_sum + ck) + math.log(nk) + ck * math.log(ck)
            - math.lgamma(ck) + math.lgamma(nk) - ld)


@jit
def level_u(code, st, hyp, c, ld, u, table):
    """Level function at the parameter with unconstrained coordinate u; member iff <= 0."""
    n = st[0]
    if n == 0:
        return -ld
    if code == GAUSS_MEAN:
        d = st[1] - n * u
        return d * d / (2.0 * hyp * hyp * (n + c)) - ld - 0.5 * math.log((n + c) / c)
    if code == GAUSS_VAR:
        z = st[2] * math.exp(-2.0 * u)
        a = 0.5 * (n + c) + 1.0
        return (0.5 * z - a * math.log(z + c) + 0.5 * n * math.log(2.0) + (0.5 * c + 1.0) * math.log(c)
                - math.lgamma(0.5 * c + 1.0) + math.lgamma(a) - ld)
    if code == BERNOULLI:
        s = st[1]
        log_mu = -_log1pexp(-u)
        log_1mu = -_log1pexp(u)
        mu = math.exp(log_mu)
        one_mu = math.exp(log_1mu)
        val = -s * log_mu - (n - s) * log_1mu
        val += math.lgamma(s + c * mu) + math.lgamma(n - s + c * one_mu)
        val -= math.lgamma(c * mu) + math.lgamma(c * one_mu)
        return val - math.lgamma(n + c) + math.lgamma(c) - ld
    if code == EXPONENTIAL:
        return _gamma_type(st[1] * math.exp(-u), n, c, 1.0, ld)
    if code == GAMMA:
        return _gamma_type(st[1] * math.exp(-u), n, c, hyp, ld)
    if code == WEIBULL:
        return _gamma_type(st[5] * math.exp(-hyp * u), n, c, 1.0, ld)
    if code == PARETO:
        return _gamma_type(st[3] * math.exp(u), n, c, 1.0, ld)
    if code == POISSON:
        lam = math.exp(u)
        s = st[1]
        return n * lam - s * u - log_I(c, c * lam) + log_I(n + c, s + c * lam) - ld
    # chi-square, u = log k
    half = 0.5 * math.exp(u)
    kk = st[4]
    psi = _digamma(half)
    disc = code == CHI2_DISCRETE
    return (n * math.lgamma(half) - half * kk - log_J(c, c * psi, disc, table)
            + log_J(n + c, kk + c * psi, disc, table) - ld)


@jit
def _safe_level(code, st, hyp, c, ld, u, table):
    v = level_u(code, st, hyp, c, ld, u, table)
    if v != v:
        return np.inf
    return v


@jit
def minimize_u(code, st, hyp, c, ld, u0, table):
    """Golden-section minimiser of the level function in u, bracket grown from u0."""
    cap = u_cap(code)
    step = 0.1 * (1.0 + abs(u0)) if code == GAUSS_MEAN else 0.1
    f0 = _safe_level(code, st, hyp, c, ld, u0, table)
    fr = _safe_level(code, st, hyp, c, ld, u0 + step, table)
    if fr > f0:
        fl = _safe_level(code, st, hyp, c, ld, u0 - step, table)
        if fl >= f0:
            a, b = u0 - step, u0 + step
        else:
            step = -step
            prev, cur, fcur = u0, u0 + step, fl
            while True:
                nxt = cur + 2.0 * (cur - prev)
                if abs(nxt) > cap:
                    nxt = -cap
                fn = _safe_level(code, st, hyp, c, ld, nxt, table)
                if fn >= fcur or nxt == -cap:
                    a, b = nxt, prev
                    break
                prev, cur, fcur = cur, nxt, fn
    else:
        prev, cur, fcur = u0, u0 + step, fr
        while True:
            nxt = cur + 2.0 * (cur - prev)
            if abs(nxt) > cap:
                nxt = cap
            fn = _safe_level(code, st, hyp, c, ld, nxt, table)
            if fn >= fcur or nxt == cap:
                a, b = prev, nxt
                break
            prev, cur, fcur = cur, nxt, fn
    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    f1 = _safe_level(code, st, hyp, c, ld, x1, table)
    f2 = _safe_level(code, st, hyp, c, ld, x2, table)
    for _ in range(300):
        if abs(b - a) <= 1e-11 * (1.0 + abs(a) + abs(b)):
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = _safe_level(code, st, hyp, c, ld, x1, table)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = _safe_level(code, st, hyp, c, ld, x2, table)
    if f1 < f2:
        return x1, f1
    return x2, f2


@jit
def _edge(code, side):
    if code == GAUSS_MEAN:
        return side * np.inf
    if code == BERNOULLI:
        return 0.0 if side < 0 else 1.0
    return 0.0 if side < 0 else np.inf


@jit
def _side(code, st, hyp, c, ld, umin, fmin, side, table):
    """Outer end of the sublevel set on one side of the minimiser."""
    cap = u_cap(code)
    step = 0.5 * (1.0 + abs(umin)) if code == GAUSS_MEAN else 0.5
    inner = umin
    finner = fmin
    status = OK
    while True:
        outer = inner + side * step
        if abs(outer) >= cap:
            outer = side * cap
        fo = _safe_level(code, st, hyp, c, ld, outer, table)
        if fo > 0.0:
            break
        if fo < finner - 1e-9 * (1.0 + abs(finner)):
            status = NON_UNIMODAL
        if outer == side * cap:
            return _edge(code, side), status
        inner, finner = outer, fo
        step *= 2.0
    for _ in range(400):
        mid = 0.5 * (inner + outer)
        if abs(outer - inner) <= 1e-12 * (1.0 + abs(mid)) or mid == inner or mid == outer:
            break
        fm = _safe_level(code, st, hyp, c, ld, mid, table)
        if fm > 0.0:
            outer = mid
        else:
            inner = mid
    return param_from_u(code, outer), status


@jit
def boundary_1d(code, st, hyp, c, ld, u0, table):
    """(lower, upper, status) of the sublevel set {F <= 0} in the user parameter."""
    if st[0] == 0:
        return _edge(code, -1.0), _edge(code, 1.0), OK
    umin, fmin = minimize_u(code, st, hyp, c, ld, u0, table)
    if fmin > 0.0:
        p = param_from_u(code, umin)
        return p, p, EMPTY
    lo, s1 = _side(code, st, hyp, c, ld, umin, fmin, -1.0, table)
    hi, s2 = _side(code, st, hyp, c, ld, umin, fmin, 1.0, table)
    return lo, hi, max(s1, s2)


@jit
def disjoint_from(code, st, hyp, c, ld, u0, lo, hi, table):
    """True when {F <= 0} does not meet the closed parameter interval [lo, hi].

    Relies on F being quasi-convex in u: either its minimiser lies inside the
    interval, or the interval endpoint nearest to it attains the minimum over
    the interval.
    """
    if st[0] == 0:
        return False
    umin, fmin = minimize_u(code, st, hyp, c, ld, u0, table)
    if fmin > 0.0:
        return True
    pmin = param_from_u(code, umin)
    if lo <= pmin <= hi:
        return False
    target = lo if pmin < lo else hi
    if not np.isfinite(target) or (code != GAUSS_MEAN and target <= 0.0) \
            or (code == BERNOULLI and target >= 1.0):
        return False
    return _safe_level(code, st, hyp, c, ld, u_from_param(code, target), table) > 0.0


@jit
def first_exit(code, stats, hyp, c, ld, p_true, table):
    """Index of the first row of ``stats`` whose set excludes p_true, or -1."""
    u = u_from_param(code, p_true)
    for i in range(stats.shape[0]):
        if _safe_level(code, stats[i], hyp, c, ld, u, table) > 0.0:
            return i
    return -1


@jit
def envelope(code, stats, hyp, c, ld, table):
    """Raw (not yet intersected) bounds for every row of ``stats``; status is the worst seen."""
    m = stats.shape[0]
    lo = np.empty(m)
    hi = np.empty(m)
    worst = OK
    u0 = 0.0
    for i in range(m):
        if stats[i, 0] > 0:
            u0 = guess_u(code, stats[i], hyp)
        a, b, s = boundary_1d(code, stats[i], hyp, c, ld, u0, table)
        lo[i] = a
        hi[i] = b
        if s > worst:
            worst = s
    return lo, hi, worst


@jit
def guess_u(code, st, hyp):
    """A starting point near the minimiser of the level function."""
    n = st[0]
    if code == GAUSS_MEAN:
        return st[1] / (n + 1.0)
    if code == GAUSS_VAR:
        return 0.5 * math.log((st[2] + 1.0) / (n + 1.0))
    if code == BERNOULLI:
        m = (st[1] + 0.5) / (n + 1.0)
        return math.log(m) - math.log1p(-m)
    if code == EXPONENTIAL or code == POISSON:
        return math.log((st[1] + 1.0) / (n + 1.0))
    if code == GAMMA:
        return math.log((st[1] + hyp) / ((n + 1.0) * hyp))
    if code == WEIBULL:
        return math.log((st[5] + 1.0) / (n + 1.0)) / hyp
    if code == PARETO:
        return math.log((n + 1.0) / (st[3] + 1.0))
    return math.log(2.0 * _inv_digamma((st[4] + _digamma(1.0)) / (n + 1.0)))
