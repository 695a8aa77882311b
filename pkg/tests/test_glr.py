import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bregcs.confseq import boundary_1d
from bregcs.errors import DomainError, SupportError
from bregcs.experiments import changepoint_study, rep_rng
from bregcs.families import FamilyKind, SuffStats, cumulative_stats
from bregcs.glr import (GlrConfig, GlrState, detect_step, doubly_uniform_level, g_factor, kappa, kappa_horizon,
                        run_detector, scan_splits)

VAR = FamilyKind("GaussianVariance", 0.0)


def _partial(p, eta=1.0):
    t = np.arange(1, p + 1, dtype=float)
    return math.fsum(1 / ((1 + t) * np.log1p(t) ** (1 + eta)))


def test_kappa_values():
    assert kappa(100, 1) == pytest.approx(2.10974, abs=1e-4)
    assert kappa(1000, 1) <= kappa(100, 1)
    assert kappa(100, 1) >= _partial(1000)
    # the plain integral tail is looser but also valid
    assert kappa(100, 1, tail="integral") == pytest.approx(_partial(100) + 1 / math.log(101), abs=1e-14)
    assert kappa(100, 1, tail="integral") > kappa(100, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 400), st.floats(0.3, 3.0))
def test_kappa_is_an_upper_bound(p, eta):
    # partial sums lower-bound the limit, so an upper bound must dominate them
    assert kappa(p, eta) >= _partial(20 * p, eta)
    assert kappa(p, eta) <= kappa(p, eta, tail="integral")


def test_inverse_g_sums_below_one():
    k = kappa(100, 1)
    t = np.arange(1, 10 ** 6 + 1)
    assert math.fsum(1 / g_factor(t, k)) <= 1.0
    assert math.fsum(1 / g_factor(np.arange(1, 101), kappa_horizon(100))) == pytest.approx(1.0, abs=1e-12)


def test_g_example():
    assert g_factor(2, 2.10974) == pytest.approx(2.10974 * 3 * math.log(3) ** 2, rel=1e-14)
    assert g_factor(2, 2.10974) == pytest.approx(7.639, abs=1e-3)


def test_config_validation():
    with pytest.raises(DomainError):
        GlrConfig(delta=0.0)
    with pytest.raises(DomainError):
        GlrConfig(c=-1)
    with pytest.raises(ValueError):
        GlrConfig(scan=0.9)
    assert GlrConfig(horizon=100).kappa == pytest.approx(kappa_horizon(100))
    assert GlrConfig().kappa == pytest.approx(kappa(100, 1))


def test_scan_grids():
    assert scan_splits(1).size == 0
    assert scan_splits(5).tolist() == [1, 2, 3, 4]
    for t in range(2, 200):
        geo = scan_splits(t, 1.1)
        assert set(geo) <= set(scan_splits(t)) and t - 1 in geo
        assert np.all(np.diff(geo) > 0)


def test_doubly_uniform_set_contains_plain_set():
    stats = SuffStats(n=10, q=12.0)
    cfg = GlrConfig()
    lo, hi = boundary_1d(VAR, stats, 1.0, 0.05)
    for p in np.linspace(lo, hi, 9)[1:-1]:
        assert doubly_uniform_level(VAR, stats, 30, 1.0, 0.05, cfg.g, p) <= 0
    wide_lo, wide_hi = boundary_1d(VAR, stats, 1.0, 0.05 / cfg.g(30))
    assert wide_lo < lo and wide_hi > hi
    # window of one observation with a large inflation: nearly everything is accepted
    one = SuffStats(n=1, q=1.0)
    assert all(doubly_uniform_level(VAR, one, 10 ** 6, 1.0, 0.05, cfg.g, s) <= 0 for s in (0.2, 1, 10, 100))


def test_never_fires_at_t1_and_checks_support():
    st_ = GlrState(VAR)
    assert detect_step(st_, GlrConfig(), 100.0) is None
    with pytest.raises(SupportError):
        detect_step(GlrState(FamilyKind("Exponential")), GlrConfig(), -1.0)


def test_streaming_matches_batch():
    cfg = GlrConfig(horizon=100)
    for r in range(5):
        rng = rep_rng(12, r)
        xs = np.r_[rng.normal(0, 1, 50), rng.normal(0, 3, 50)]
        state = GlrState(VAR)
        hit = None
        for x in xs:
            hit = detect_step(state, cfg, x)
            if hit:
                break
        assert hit == run_detector(VAR, xs, cfg)
        if hit:
            t, s = hit
            assert 1 <= s < t and state.t == t


def test_geometric_scan_is_conservative():
    full = GlrConfig(horizon=100)
    geo = GlrConfig(horizon=100, scan=1.1)
    for r in range(20):
        rng = rep_rng(13, r)
        xs = np.r_[rng.normal(0, 1, 50), rng.normal(0, 2.5, 50)]
        hg, hf = run_detector(VAR, xs, geo), run_detector(VAR, xs, full)
        if hg:
            assert hf and hf[0] <= hg[0]


def test_detection_is_disjointness():
    cfg = GlrConfig(horizon=100)
    rng = rep_rng(14, 0)
    xs = np.r_[rng.normal(0, 1, 50), rng.normal(0, 4, 50)]
    t, s = run_detector(VAR, xs, cfg)
    prefix = np.vstack([np.zeros((1, 6)), cumulative_stats(VAR, xs)])
    a = boundary_1d(VAR, SuffStats.from_array(prefix[s]), 1.0, cfg.delta_prefix)
    b = boundary_1d(VAR, SuffStats.from_array(prefix[t] - prefix[s]), 1.0, cfg.delta_window / cfg.g(t))
    assert a[1] < b[0] or b[1] < a[0]
    assert t > 50


def test_bernoulli_no_change_false_alarms():
    kind = FamilyKind("Bernoulli")
    cfg = GlrConfig(horizon=100, scan=1.1)
    alarms = sum(run_detector(kind, rep_rng(15, r).binomial(1, 0.3, 100).astype(float), cfg) is not None
                 for r in range(300))
    assert alarms / 300 <= 0.05


def test_t_star_past_horizon_is_no_change():
    rows = changepoint_study(1.0, 4.0, t_star=500, horizon=60, reps=20, seed=3, scan=1.1)
    base = changepoint_study(1.0, 1.0, t_star=60, horizon=60, reps=20, seed=3, scan=1.1)
    assert rows == base


def test_gaussian_2d_detector():
    kind = FamilyKind("Gaussian2D")
    cfg = GlrConfig(horizon=60, scan=1.3)
    rng = rep_rng(16, 0)
    xs = np.r_[rng.normal(0, 1, 30), rng.normal(3, 1, 30)]
    hit = run_detector(kind, xs, cfg)
    assert hit is not None and hit[0] > 30
    assert run_detector(kind, rng.normal(0, 1, 40), cfg) is None
