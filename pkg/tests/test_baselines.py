import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from bregcs import baselines as bl
from bregcs.confseq import boundary_1d
from bregcs.errors import DomainError, SupportError
from bregcs.experiments import rep_rng
from bregcs.families import FamilyKind, SuffStats
from bregcs.specfun import riemann_zeta


def test_laplace_examples():
    assert bl.laplace_radius(1.0, 3, 0.05) == pytest.approx(math.sqrt(4 / 3 * math.log(80) / 3), abs=1e-12)
    assert bl.laplace_radius(1.0, 3, 0.05) == pytest.approx(1.3956, abs=1e-4)
    n = 10
    want = math.sqrt((1 + 1 / n) * math.log(2 * math.sqrt(1 + n) / 0.05) / (2 * n))
    assert bl.laplace_radius(0.5, n, 0.05, bernoulli=True) == pytest.approx(want, abs=1e-12)
    r = [bl.laplace_radius(1.0, k, 0.05) for k in range(1, 201)]
    assert np.all(np.diff(r) < 0)
    assert bl.laplace_radius(1.0, 10, 1e-6) > bl.laplace_radius(1.0, 10, 0.05)


def test_peeling_epochs():
    assert bl.peeling_epoch(1) == (0, 1)
    for n in range(1, 3000):
        k, c = bl.peeling_epoch(n)
        assert math.ceil(1.1 ** k) <= n <= math.floor(1.1 ** (k + 1)) and c == math.floor(1.1 ** (k + 1))
    assert bl.peeling_weight(0) == pytest.approx(riemann_zeta(1.1), abs=1e-12)
    assert bl.peeling_weight(0) == pytest.approx(10.5844, abs=1e-4)


def test_bentkus_fallback_is_conservative():
    assert bl.bentkus_peeling_radius(100, 0.05) >= bl.laplace_radius(0.5, 100, 0.05, bernoulli=True)


def test_kk_threshold_min_property():
    x = math.log(20)
    cg = bl.kk_threshold_cg(x)
    for lam in np.linspace(0.51, 0.99, 25):
        assert cg <= (bl.kk_g(lam) + x) / lam + 1e-9
    assert cg <= (bl.kk_g(0.75) + x) / 0.75


def test_kk_gaussian_symmetric_and_exponential_ordered():
    lo, hi = bl.kaufmann_koolen_set("gaussian", 50, 0.3, 0.05)
    assert 0.3 - lo == pytest.approx(hi - 0.3, abs=1e-12)
    lo, hi = bl.kaufmann_koolen_set("exponential", 50, 1.3, 0.05)
    assert 0 < lo < 1.3 < hi
    d = lambda mu: 1.3 / mu - 1 - math.log(1.3 / mu)
    assert d(lo) == pytest.approx(d(hi), abs=1e-10)


def test_kk_width_at_least_bregman_exponential():
    # median over replicates: KK width >= Bregman width at c = 1 (n = 100)
    kind = FamilyKind("Exponential")
    ratios = []
    for r in range(100):
        xs = rep_rng(31, r).exponential(1.0, 100)
        lo, hi = bl.kaufmann_koolen_set("exponential", 100, xs.mean(), 0.05)
        blo, bhi = boundary_1d(kind, SuffStats(100, xs.sum()), 1.0, 0.05)
        ratios.append((hi - lo) / (bhi - blo))
    assert np.median(ratios) >= 1.0


def test_hedged_capital_basics():
    x = np.full(50, 0.5)
    assert np.allclose(bl.hedged_capital_log_capital(x, 0.05, 0.5), 0.0, atol=1e-12)
    lo, hi = bl.hedged_capital_set(x, 0.05)
    assert 0.0 <= lo <= 0.5 <= hi <= 1.0
    xs = rep_rng(0, 0).binomial(1, 0.8, 200).astype(float)
    lo, hi = bl.hedged_capital_envelope(xs, 0.05)
    assert np.all((0 <= lo) & (lo <= hi) & (hi <= 1))
    with pytest.raises(SupportError):
        bl.hedged_capital_set([0.2, 1.5], 0.05)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-4, 1 - 1e-4), st.integers(1, 200))
def test_chi2_quantile_matches_scipy(p, dof):
    assert bl.chi2_quantile(p, dof) == pytest.approx(sps.chi2.ppf(p, dof), rel=1e-9)


def test_gammainc_matches_scipy():
    from scipy import special
    for a in (0.5, 1, 3.5, 20, 150):
        for x in (0.01, 0.7, 3, 25, 200):
            P, Q = bl.gammainc_regularized(a, x)
            assert P == pytest.approx(special.gammainc(a, x), abs=1e-13)
            assert Q == pytest.approx(special.gammaincc(a, x), abs=1e-13)


def test_chi2_union_truth_covered_and_mean():
    N = 50
    hits = 0
    zs = []
    for r in range(1000):
        xs = rep_rng(5, r).normal(1.0, 2.0, N)
        hits += bl.chi2_union_membership(xs, N, 0.05, 1.0, 2.0, N)
        zs.append(np.sum(((xs - 1.0) / 2.0) ** 2))
    assert hits / 1000 >= 0.95
    assert np.mean(zs) == pytest.approx(N, rel=0.03)


def test_chi2_union_unbounded():
    xs = rep_rng(6, 0).normal(0.0, 1.0, 50)
    for alpha in (1e3, 1e5, 1e7):
        assert bl.chi2_union_membership(xs, 50, 0.05, 0.0 + alpha, alpha, 50)


def test_validation():
    with pytest.raises(DomainError):
        bl.laplace_radius(1.0, 5, 0.0)
    with pytest.raises(ValueError):
        bl.chi2_union_membership(np.zeros(5), 5, 0.05, 0.0, 1.0, 6)
    with pytest.raises(ValueError):
        bl.kaufmann_koolen_set("poisson", 5, 1.0, 0.05)
