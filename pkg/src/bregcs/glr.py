"""Doubly time-uniform sets and the regularised GLR change-point detector.

At time t the detector compares, for each candidate split s < t, the
confidence set built on X_1..X_s (level delta/2) with the doubly uniform set
built on X_{s+1}..X_t (level delta/2, budget inflated by log g(t)).  A change
is declared at the first t where the two sets are disjoint for some s.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._accel import jit
from .confseq import confset_2d
from .errors import DomainError, NumericalAnomaly
from .families import _TABLE, SuffStats, cumulative_stats


def kappa(p=100, eta=1.0, tail="midpoint"):
    """Upper bound S_p + tail on sum_t 1/((1+t) log^(1+eta)(1+t)).

    ``tail="integral"`` bounds the remainder by the integral from p, giving
    1/(eta log(1+p)^eta).  The summand is log-convex, so each term is also
    below its integral over [t - 1/2, t + 1/2]; ``tail="midpoint"`` uses that
    and gives 1/(eta log(3/2+p)^eta), which is tighter and still an upper bound.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if tail not in ("midpoint", "integral"):
        raise ValueError(f"tail must be 'midpoint' or 'integral', got {tail!r}")
    t = np.arange(1, p + 1, dtype=float)
    s_p = math.fsum(1.0 / ((1.0 + t) * np.log1p(t) ** (1.0 + eta)))
    start = p + 0.5 if tail == "midpoint" else p
    return s_p + 1.0 / (eta * math.log1p(start) ** eta)


def kappa_horizon(horizon, eta=1.0):
    """sum_{t <= T} 1/((1+t) log^(1+eta)(1+t)): makes sum_{t <= T} 1/g(t) equal to one."""
    t = np.arange(1, horizon + 1, dtype=float)
    return math.fsum(1.0 / ((1.0 + t) * np.log1p(t) ** (1.0 + eta)))


def g_factor(t, kappa_value, eta=1.0):
    """g(t) = kappa (1 + t) log^(1+eta)(1 + t)."""
    t = np.asarray(t, dtype=float)
    out = kappa_value * (1.0 + t) * np.log1p(t) ** (1.0 + eta)
    return float(out) if out.ndim == 0 else out


@dataclass
class GlrConfig:
    """Detector settings; ``scan`` is "full" or a ratio > 1 for a geometric split grid."""

    delta: float = 0.05
    c: float = 1.0
    eta: float = 1.0
    kappa: float = None
    horizon: int = None
    scan: object = "full"
    split: float = 0.5

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise DomainError(f"delta must be in (0, 1], got {self.delta}")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if not 0 < self.split < 1:
            raise DomainError(f"split must be in (0, 1), got {self.split}")
        if self.scan != "full" and not float(self.scan) > 1:
            raise ValueError(f"scan must be 'full' or a ratio > 1, got {self.scan!r}")
        if self.kappa is None:
            self.kappa = kappa_horizon(self.horizon, self.eta) if self.horizon else kappa(100, self.eta)

    @property
    def delta_prefix(self):
        return self.delta * self.split

    @property
    def delta_window(self):
        return self.delta * (1.0 - self.split)

    def g(self, t):
        return g_factor(t, self.kappa, self.eta)


def scan_splits(t, scan="full"):
    """Candidate splits s in 1..t-1, either all or with geometrically spaced window lengths."""
    if t < 2:
        return np.zeros(0, dtype=np.int64)
    if scan == "full":
        return np.arange(1, t, dtype=np.int64)
    ratio = float(scan)
    lengths = set()
    w = 1.0
    while w < t:
        lengths.add(int(math.ceil(w)))
        w *= ratio
    lengths = np.array(sorted(x for x in lengths if x <= t - 1), dtype=np.int64)
    return np.sort(t - lengths)


def doubly_uniform_level(kind, window_stats, t, c, delta, g, p0):
    """Level function on the window with delta replaced by delta / g(t); members are <= 0."""
    from .families import level_function

    gt = g(t) if callable(g) else float(g)
    return level_function(kind, window_stats, c, delta / gt, p0)


@jit
def _glr_check(code, prefix, t, splits, hyp, c, ld_prefix, ld_window, lo_cache, hi_cache, table):
    """First split s (in ``splits`` order) whose prefix and window sets are disjoint, else -1.

    ``lo_cache``/``hi_cache`` hold prefix intervals indexed by s and are
    filled lazily (NaN marks a missing entry).
    """
    st_t = prefix[t]
    for s in splits:
        if lo_cache[s] != lo_cache[s]:
            u0 = K.guess_u(code, prefix[s], hyp)
            a, b, status = K.boundary_1d(code, prefix[s], hyp, c, ld_prefix, u0, table)
            if status == K.EMPTY:
                return -2 - s
            lo_cache[s] = a
            hi_cache[s] = b
        win = st_t - prefix[s]
        u0 = K.guess_u(code, win, hyp)
        if K.disjoint_from(code, win, hyp, c, ld_window, u0, lo_cache[s], hi_cache[s], table):
            return s
    return -1


@jit
def _glr_run(code, prefix, hyp, c, ld_prefix, ld_windows, full, ratio, table):
    """Detection time (1-based) and split for a whole stream, or (-1, -1)."""
    T = prefix.shape[0] - 1
    lo_cache = np.full(T + 1, np.nan)
    hi_cache = np.full(T + 1, np.nan)
    for t in range(2, T + 1):
        if full:
            splits = np.arange(1, t)
        else:
            lens = np.empty(t, dtype=np.int64)
            m = 0
            w = 1.0
            last = 0
            while w < t:
                L = int(math.ceil(w))
                if L != last and L <= t - 1:
                    lens[m] = L
                    m += 1
                    last = L
                w *= ratio
            splits = np.empty(m, dtype=np.int64)
            for i in range(m):
                splits[i] = t - lens[m - 1 - i]
        s = _glr_check(code, prefix, t, splits, hyp, c, ld_prefix, ld_windows[t], lo_cache, hi_cache, table)
        if s >= 0:
            return t, s
        if s <= -2:
            return -2, -2 - s
    return -1, -1


@dataclass
class GlrState:
    """Streaming detector state: prefix statistics for t = 0..current and cached prefix sets."""

    kind: object
    prefix: list = field(default_factory=list)
    lo_cache: list = field(default_factory=list)
    hi_cache: list = field(default_factory=list)
    sets2d: dict = field(default_factory=dict)
    alarm: tuple = None

    def __post_init__(self):
        if not self.prefix:
            self.prefix = [np.zeros(6)]
            self.lo_cache = [np.nan]
            self.hi_cache = [np.nan]

    @property
    def t(self):
        return len(self.prefix) - 1


def _increment(kind, x):
    return cumulative_stats(kind, [x])[0]


def detect_step(state, config, x):
    """Fold in one observation; return (t, s) when a change is detected at this step, else None."""
    kind, cfg = state.kind, config
    state.prefix.append(state.prefix[-1] + _increment(kind, x))
    state.lo_cache.append(np.nan)
    state.hi_cache.append(np.nan)
    t = state.t
    if t < 2:
        return None
    splits = scan_splits(t, cfg.scan)
    if kind.dim == 2:
        s = _check_2d(state, cfg, t, splits)
    else:
        prefix = np.array(state.prefix)
        lo = np.array(state.lo_cache)
        hi = np.array(state.hi_cache)
        ld_w = math.log(cfg.g(t) / cfg.delta_window)
        s = _glr_check(kind.code, prefix, t, splits, float(kind.hyper), float(cfg.c),
                       math.log(1.0 / cfg.delta_prefix), ld_w, lo, hi, _TABLE)
        state.lo_cache[:] = lo.tolist()
        state.hi_cache[:] = hi.tolist()
        if s <= -2:
            raise NumericalAnomaly("empty prefix confidence set", {"s": -2 - s, "t": t})
    if s >= 0:
        state.alarm = (t, int(s))
        return state.alarm
    return None


_BOX_2D = ((-2.0, 4.0), (0.1, 4.0))


def _check_2d(state, cfg, t, splits, box=_BOX_2D, resolution=(256, 256)):
    # small windows give sets that fill the box; the edge warning is expected there
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _scan_2d(state, cfg, t, splits, box, resolution)


def _scan_2d(state, cfg, t, splits, box, resolution):
    cache = state.sets2d
    for s in splits:
        if s not in cache:
            cache[s] = confset_2d(SuffStats.from_array(state.prefix[s]), cfg.c, cfg.delta_prefix,
                                  box, resolution).membership
        win = SuffStats.from_array(state.prefix[t] - state.prefix[s])
        wset = confset_2d(win, cfg.c, cfg.delta_window / cfg.g(t), box, resolution).membership
        if not np.any(cache[s] & wset):
            return int(s)
    return -1


def run_detector(kind, xs, config):
    """First detection (t, s) on a whole stream, or None; same decisions as repeated detect_step."""
    if kind.dim != 1:
        state = GlrState(kind)
        for x in xs:
            hit = detect_step(state, config, x)
            if hit:
                return hit
        return None
    prefix = np.vstack([np.zeros((1, 6)), cumulative_stats(kind, xs)])
    T = prefix.shape[0] - 1
    ld_w = np.zeros(T + 1)
    ld_w[1:] = np.log(config.g(np.arange(1, T + 1)) / config.delta_window)
    full = config.scan == "full"
    ratio = 0.0 if full else float(config.scan)
    t, s = _glr_run(kind.code, prefix, float(kind.hyper), float(config.c),
                    math.log(1.0 / config.delta_prefix), ld_w, full, ratio, _TABLE)
    if t == -2:
        raise NumericalAnomaly("empty prefix confidence set", {"s": int(s)})
    return None if t < 0 else (int(t), int(s))
