import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bregcs import baselines as bl
from bregcs.confseq import (Envelope, boundary_1d, confset_2d, envelope, envelope_from_stats, first_exit,
                            gaussian_mean_c_star, running_intersection, tune_c)
from bregcs.errors import DomainError, NumericalAnomaly
from bregcs.experiments import rep_rng, sample
from bregcs.families import FamilyKind, SuffStats, cumulative_stats, level_function

from _util import GAUSS_2D, ONE_D, kind_id, random_param


def test_gaussian_mean_boundary_matches_closed_form():
    kind = FamilyKind("GaussianMean", 1.0)
    lo, hi = boundary_1d(kind, SuffStats(100, 0.0), 1.0, 0.05)
    r = math.sqrt(2 * 101 * (math.log(20) + 0.5 * math.log(101))) / 100
    assert r == pytest.approx(0.3273, abs=1e-4)
    assert lo == pytest.approx(-r, abs=1e-9) and hi == pytest.approx(r, abs=1e-9)


def test_bernoulli_envelope_stays_in_unit_interval():
    kind = FamilyKind("Bernoulli")
    for r in range(50):
        xs = sample(kind, 0.8, 200, rep_rng(3, r))
        env = envelope(kind, xs, 1.0, 0.05, intersect=False)
        assert np.all(env.lower >= 0.0) and np.all(env.upper <= 1.0)
        assert np.all(env.lower <= env.upper)


def test_empty_data_gives_whole_domain():
    lo, hi = boundary_1d(FamilyKind("Pareto"), SuffStats(), 1.0, 0.05)
    assert (lo, hi) == (0.0, math.inf)
    lo, hi = boundary_1d(FamilyKind("GaussianMean", 1.0), SuffStats(), 1.0, 0.05)
    assert (lo, hi) == (-math.inf, math.inf)


def test_sentinels_at_small_n():
    lo, hi = boundary_1d(FamilyKind("GaussianVariance", 0.0), SuffStats(n=1, q=1.0), 1.0, 0.05)
    assert hi == math.inf and lo > 0
    lo, hi = boundary_1d(FamilyKind("Pareto"), SuffStats(n=1, l=0.5), 1.0, 0.05)
    assert lo == 0.0 and math.isfinite(hi)


@pytest.mark.parametrize("kind", ONE_D, ids=kind_id)
def test_endpoints_are_roots(kind):
    rng = np.random.default_rng(21)
    xs = sample(kind, random_param(kind, rng), 40, rng)
    stats = SuffStats.from_array(cumulative_stats(kind, xs)[-1])
    lo, hi = boundary_1d(kind, stats, 1.0, 0.05)
    if kind.mixture == "discrete" and kind.name == "ChiSquare":
        # integer bounds: the members nearest the continuous boundary
        assert level_function(kind, stats, 1.0, 0.05, lo) <= 0
        assert level_function(kind, stats, 1.0, 0.05, hi) <= 0
        assert level_function(kind, stats, 1.0, 0.05, hi + 1) > 0
        if lo > 1:
            assert level_function(kind, stats, 1.0, 0.05, lo - 1) > 0
        return
    for edge in (lo, hi):
        if np.isfinite(edge) and edge != 0.0:
            assert abs(level_function(kind, stats, 1.0, 0.05, edge)) <= 1e-6


def test_inconsistent_statistics_raise_anomaly():
    with pytest.raises(NumericalAnomaly) as info:
        boundary_1d(FamilyKind("Bernoulli"), SuffStats(5, 7.0), 1.0, 0.05)
    assert "stats" in info.value.diagnostics


def test_validation():
    with pytest.raises(DomainError):
        boundary_1d(FamilyKind("Bernoulli"), SuffStats(), 0.0, 0.05)
    with pytest.raises(DomainError):
        boundary_1d(FamilyKind("Bernoulli"), SuffStats(), 1.0, 1.5)


def test_running_intersection_examples():
    env = Envelope(np.array([0.0, -1.0, 0.5]), np.array([3.0, 4.0, 1.0]))
    out = running_intersection(env)
    assert out.lower.tolist() == [0.0, 0.0, 0.5] and out.upper.tolist() == [3.0, 3.0, 1.0]
    mono = Envelope(np.array([0.0, 0.1, 0.2]), np.array([1.0, 0.9, 0.8]))
    again = running_intersection(mono)
    assert np.array_equal(again.lower, mono.lower) and np.array_equal(again.upper, mono.upper)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 5)), min_size=1, max_size=40))
def test_running_intersection_idempotent_and_monotone(pairs):
    lo = np.array([a for a, _ in pairs])
    hi = lo + np.array([w for _, w in pairs])
    once = running_intersection(Envelope(lo, hi))
    twice = running_intersection(once)
    assert np.array_equal(once.lower, twice.lower) and np.array_equal(once.upper, twice.upper)
    assert np.all(np.diff(once.lower) >= 0) and np.all(np.diff(once.upper) <= 0)


def test_envelope_width_comparable_to_laplace():
    kind = FamilyKind("GaussianMean", 1.0)
    xs = sample(kind, 0.0, 200, rep_rng(0, 0))
    env = envelope(kind, xs, 1.0, 0.05)
    lap = 2 * bl.laplace_radius(1.0, 200, 0.05)
    assert 0.5 <= env.width[-1] / lap <= 2.0


def test_first_exit_consistent_with_level_function():
    kind = FamilyKind("Exponential")
    xs = sample(kind, 1.0, 200, rep_rng(9, 0))
    stats = cumulative_stats(kind, xs)
    # a parameter far from the truth leaves quickly
    t = first_exit(kind, stats, 1.0, 0.05, 5.0)
    assert t > 0
    assert level_function(kind, SuffStats.from_array(stats[t - 1]), 1.0, 0.05, 5.0) > 0
    assert all(level_function(kind, SuffStats.from_array(stats[i]), 1.0, 0.05, 5.0) <= 0 for i in range(t - 1))
    env = envelope_from_stats(kind, stats, 1.0, 0.05)
    assert env.upper[t - 1] < 5.0 and (t == 1 or env.upper[t - 2] >= 5.0)


def test_stopping_time_coverage():
    # stop the first time the running mean exceeds 1.2 (capped at 200)
    kind = FamilyKind("Exponential")
    misses = 0
    reps = 1000
    for r in range(reps):
        xs = sample(kind, 1.0, 200, rep_rng(77, r))
        mean = np.cumsum(xs) / np.arange(1, 201)
        hit = np.nonzero(mean > 1.2)[0]
        tau = int(hit[0]) + 1 if hit.size else 200
        stats = SuffStats.from_array(cumulative_stats(kind, xs[:tau])[-1])
        misses += level_function(kind, stats, 1.0, 0.05, 1.0) > 0
    assert 1 - misses / reps >= 0.93


def test_confset_2d_empty_data_is_full():
    cs = confset_2d(SuffStats(), 1.0, 0.05, resolution=(32, 32))
    assert cs.membership.all()


def test_confset_2d_rows_are_intervals_and_contain_truth():
    rng = np.random.default_rng(4)
    xs = rng.normal(1.0, 1.0, 100)
    stats = SuffStats.from_array(cumulative_stats(GAUSS_2D, xs)[-1])
    cs = confset_2d(stats, 1.0, 0.05, resolution=(256, 256))
    assert cs.membership.any() and not cs.touches_edge
    for row in cs.membership:
        idx = np.nonzero(row)[0]
        if idx.size:
            assert idx[-1] - idx[0] + 1 == idx.size
    (m0, m1), (s0, s1) = cs.bounding_box()
    assert m0 < 1.0 < m1 and s0 < 1.0 < s1
    assert cs.contains(1.0, 1.0)


def test_confset_2d_edge_warning_and_validation():
    with pytest.warns(RuntimeWarning):
        confset_2d(SuffStats(2, 1.0, 1.0), 1.0, 0.05, resolution=(16, 16))
    with pytest.raises(DomainError):
        confset_2d(SuffStats(), 1.0, 0.05, box=((-1, 1), (-1, 1)), resolution=(4, 4))
    with pytest.raises(ValueError):
        confset_2d(SuffStats(), 1.0, 0.05, resolution=(1, 4))


@pytest.mark.slow
def test_confset_2d_full_resolution_coverage():
    hits = 0
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        for r in range(1000):
            xs = rep_rng(2, r).normal(1.0, 1.0, 100)
            cs = confset_2d(SuffStats.from_array(cumulative_stats(GAUSS_2D, xs)[-1]), 1.0, 0.05)
            assert cs.membership.any()
            hits += cs.contains(1.0, 1.0)
    assert hits / 1000 >= 0.95


def test_tune_c_gaussian_interior_and_dominates_c1():
    kind = FamilyKind("GaussianMean", 1.0)
    stats = SuffStats(100, 3.0)
    c_star, w = tune_c(kind, stats, 0.05)
    assert 0.01 < c_star < 100
    lo, hi = boundary_1d(kind, stats, 1.0, 0.05)
    assert w <= hi - lo + 1e-12
    assert c_star == pytest.approx(gaussian_mean_c_star(100, 0.05), rel=1e-3)


def test_tune_c_flat_warning():
    # without data every c gives the whole real line
    with pytest.raises(ValueError):
        tune_c(FamilyKind("GaussianMean", 1.0), SuffStats(), 0.05)
    with pytest.warns(RuntimeWarning):
        tune_c(FamilyKind("GaussianVariance", 0.0), SuffStats(n=1, q=1.0), 0.05)
