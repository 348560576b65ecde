"""Tests for the exact small-instance laws and distance computations."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from cpstein import (
    BudgetExceededError,
    CompoundPoissonParams,
    GammaMixing,
    IndependentSumModel,
    MixedPoissonModel,
    ReliabilityModel,
    RunsModel,
    TwoPointMixing,
    cp_pmf,
    distance,
    mixed_exact_pmf,
    reliability_exact_pmf,
    reliability_mc_pmf,
    runs_exact_pmf,
    sums_exact_pmf,
)


def runs_brute_force(n, p):
    """Exhaustive 2^n enumeration of the circular adjacent-pair count."""
    patterns = np.arange(1 << n, dtype=np.int64)
    bits = (patterns[:, None] >> np.arange(n)) & 1
    pairs = (bits * np.roll(bits, -1, axis=1)).sum(axis=1)
    ones = bits.sum(axis=1)
    weights = p**ones * (1.0 - p) ** (n - ones)
    return np.bincount(pairs, weights=weights, minlength=n + 1)


def reliability_brute_force(n, k, q):
    """Exhaustive 2^(n^2) enumeration of the all-failed k x k subgrid count."""
    cells = n * n
    pmax = (n - k + 1) ** 2
    pmf = np.zeros(pmax + 1)
    for pattern in range(1 << cells):
        grid = np.array(
            [(pattern >> i) & 1 for i in range(cells)], dtype=bool
        ).reshape(n, n)
        count = 0
        for r in range(n - k + 1):
            for c in range(n - k + 1):
                if grid[r : r + k, c : c + k].all():
                    count += 1
        ones = int(grid.sum())
        pmf[count] += q**ones * (1.0 - q) ** (cells - ones)
    return pmf


# ---------------------------------------------------------------------------
# runs


def test_runs_n3_closed_values():
    # n=3, p=1/2: W in {0, 1, 3} with probabilities 1/2, 3/8, 1/8
    t = runs_exact_pmf(RunsModel(3, 0.5))
    assert_allclose(t.pmf, [0.5, 0.375, 0.0, 0.125], atol=1e-15)
    assert t.tail_mass == 0.0


def test_runs_dp_matches_brute_force():
    for n in (3, 5, 8, 11):
        for p in (0.1, 0.3, 0.5, 0.7):
            t = runs_exact_pmf(RunsModel(n, p))
            assert_allclose(t.pmf, runs_brute_force(n, p), atol=1e-13)


def test_runs_dp_matches_brute_force_n16():
    t = runs_exact_pmf(RunsModel(16, 0.3))
    assert_allclose(t.pmf, runs_brute_force(16, 0.3), atol=1e-13)


def test_runs_mean_is_n_p_squared():
    for n, p in ((10, 0.2), (100, 0.45), (400, 0.07)):
        t = runs_exact_pmf(RunsModel(n, p))
        assert_allclose(t.mean(), n * p * p, rtol=1e-10)
        assert_allclose(t.total_mass(), 1.0, atol=1e-12)


def test_runs_degenerate_edges():
    all_fail = runs_exact_pmf(RunsModel(5, 0.0))
    assert all_fail.pmf[0] == 1.0
    all_succeed = runs_exact_pmf(RunsModel(5, 1.0))
    assert all_succeed.pmf[5] == 1.0


def test_runs_budget():
    with pytest.raises(BudgetExceededError):
        runs_exact_pmf(RunsModel(2001, 0.1))


# ---------------------------------------------------------------------------
# reliability


def test_reliability_exact_matches_brute_force():
    t = reliability_exact_pmf(ReliabilityModel(3, 2, 0.5))
    assert_allclose(t.pmf, reliability_brute_force(3, 2, 0.5), atol=1e-14)


def test_reliability_exact_matches_brute_force_asymmetric_q():
    t = reliability_exact_pmf(ReliabilityModel(3, 2, 0.3))
    assert_allclose(t.pmf, reliability_brute_force(3, 2, 0.3), atol=1e-14)


def test_reliability_k_equals_n():
    # single k x k window: W ~ Bernoulli(q^{k^2})
    t = reliability_exact_pmf(ReliabilityModel(3, 3, 0.4))
    assert_allclose(t.pmf, [1 - 0.4**9, 0.4**9], atol=1e-15)


def test_reliability_degenerate_q():
    full = reliability_exact_pmf(ReliabilityModel(4, 2, 1.0))
    assert full.pmf[9] == 1.0  # every one of the (n-k+1)^2 windows fails
    none = reliability_exact_pmf(ReliabilityModel(4, 2, 0.0))
    assert none.pmf[0] == 1.0


def test_reliability_budget():
    with pytest.raises(BudgetExceededError):
        reliability_exact_pmf(ReliabilityModel(6, 2, 0.3))


def test_reliability_mc_reproducible_and_consistent():
    m = ReliabilityModel(4, 2, 0.3)
    a = reliability_mc_pmf(m, samples=50_000, seed=7)
    b = reliability_mc_pmf(m, samples=50_000, seed=7)
    assert np.array_equal(a.pmf, b.pmf)
    assert a.mc_samples == 50_000
    exact = reliability_exact_pmf(m)
    hi = min(a.x_max, exact.x_max)
    for x in range(hi + 1):
        p = float(exact.pmf[x])
        se = math.sqrt(p * (1.0 - p) / a.mc_samples)  # true binomial scale
        assert abs(a.pmf[x] - exact.pmf[x]) <= 4 * se + 1e-12


def test_reliability_mc_seed_sensitivity():
    m = ReliabilityModel(4, 2, 0.3)
    a = reliability_mc_pmf(m, samples=20_000, seed=1)
    b = reliability_mc_pmf(m, samples=20_000, seed=2)
    assert not np.array_equal(a.pmf, b.pmf)


def test_reliability_mc_chunking_invariant():
    # chunked accumulation must give one pmf regardless of sample count
    # alignment with the chunk size (1 << 17)
    m = ReliabilityModel(4, 2, 0.5)
    t = reliability_mc_pmf(m, samples=(1 << 17) + 1234, seed=3)
    assert_allclose(t.total_mass(), 1.0, atol=1e-12)
    assert t.mc_samples == (1 << 17) + 1234


# ---------------------------------------------------------------------------
# mixed Poisson


def test_two_point_mixture_pmf():
    m = MixedPoissonModel(TwoPointMixing(2.5, 3.5, 0.5))
    t = mixed_exact_pmf(m)
    want0 = 0.5 * math.exp(-2.5) + 0.5 * math.exp(-3.5)
    assert_allclose(t.pmf[0], want0, rtol=1e-14)
    x = np.arange(t.x_max + 1)
    direct = 0.5 * stats.poisson.pmf(x, 2.5) + 0.5 * stats.poisson.pmf(x, 3.5)
    assert_allclose(t.pmf, direct, rtol=1e-12, atol=1e-300)
    assert t.tail_mass <= 1e-12


def test_gamma_mixture_is_negative_binomial():
    # Poisson mixed over Gamma(r, s) is negative binomial with
    # success probability 1/(1+s)
    r, s = 3.0, 0.7
    m = MixedPoissonModel(GammaMixing(r, s))
    t = mixed_exact_pmf(m)
    x = np.arange(t.x_max + 1)
    direct = stats.nbinom.pmf(x, r, 1.0 / (1.0 + s))
    assert_allclose(t.pmf, direct, rtol=1e-10, atol=1e-300)


# ---------------------------------------------------------------------------
# independent sums


def test_sums_exact_single_component():
    t = sums_exact_pmf(IndependentSumModel([[0.3, 0.2, 0.5]]))
    assert_allclose(t.pmf, [0.3, 0.2, 0.5], atol=1e-15)


def test_sums_exact_convolution():
    m = IndependentSumModel([[0.5, 0.5], [0.25, 0.75]])
    t = sums_exact_pmf(m)
    # direct product enumeration
    want = np.zeros(3)
    for a, pa in enumerate((0.5, 0.5)):
        for b, pb in enumerate((0.25, 0.75)):
            want[a + b] += pa * pb
    assert_allclose(t.pmf, want, atol=1e-15)


def test_sums_exact_moments():
    m = IndependentSumModel([[0.7, 0.12, 0.0, 0.18]] * 5)
    t = sums_exact_pmf(m)
    assert_allclose(t.mean(), m.ew, rtol=1e-12)
    assert_allclose(t.var(), m.var_w, rtol=1e-10)
    assert_allclose(t.total_mass(), 1.0, atol=1e-12)


def test_sums_budget():
    big = [[0.5, 0.5]] * 8000  # support ~8000, cost ~ sum of partial supports
    with pytest.raises(BudgetExceededError):
        sums_exact_pmf(IndependentSumModel(big))


# ---------------------------------------------------------------------------
# distance


def test_distance_identity_and_symmetry():
    t = cp_pmf(CompoundPoissonParams([1.0, 0.5]))
    rep = distance(t, t)
    assert rep.d_k == 0.0
    assert rep.certified_slack == 2 * t.tail_mass
    a = cp_pmf(CompoundPoissonParams([1.0]))
    ab = distance(a, t)
    ba = distance(t, a)
    assert ab.d_k == ba.d_k
    assert ab.d_tv == ba.d_tv


def test_distance_triangle_inequality():
    a = cp_pmf(CompoundPoissonParams([1.0]))
    b = cp_pmf(CompoundPoissonParams([1.0, 0.2]))
    c = cp_pmf(CompoundPoissonParams([0.5, 0.4]))
    slack = 2 * (a.tail_mass + b.tail_mass + c.tail_mass)
    assert distance(a, c).d_k <= distance(a, b).d_k + distance(b, c).d_k + slack
    assert distance(a, c).d_tv <= distance(a, b).d_tv + distance(b, c).d_tv + slack


def test_distance_disjoint_supports():
    from cpstein import DistributionTable

    a = DistributionTable(pmf=np.array([1.0]), tail_mass=0.0)
    b = DistributionTable(pmf=np.array([0.0, 0.0, 1.0]), tail_mass=0.0)
    rep = distance(a, b)
    assert rep.d_k == 1.0
    assert rep.d_tv == 1.0
    assert rep.argmax_y == 0


def test_distance_known_pair_regression():
    # d_K and d_TV between Poisson(1) and the compound law with rates
    # (0.9, 0.05); frozen from a 40-digit arbitrary-precision evaluation
    a = cp_pmf(CompoundPoissonParams([1.0]))
    b = cp_pmf(CompoundPoissonParams([0.9, 0.05]))
    rep = distance(a, b)
    assert_allclose(rep.d_k, 0.01886158228305888532, rtol=0, atol=1e-11)
    assert_allclose(rep.d_tv, 0.027785074976314347023, rtol=0, atol=1e-11)
    assert rep.argmax_y == 0
    assert rep.mc_stderr == 0.0


def test_distance_reports_mc_stderr():
    m = ReliabilityModel(4, 2, 0.3)
    mc = reliability_mc_pmf(m, samples=30_000, seed=11)
    exact = reliability_exact_pmf(m)
    rep = distance(mc, exact)
    assert rep.mc_stderr > 0.0
    assert rep.d_k <= rep.d_tv + 1e-15


def test_distance_json_keys():
    a = cp_pmf(CompoundPoissonParams([1.0]))
    js = distance(a, a).to_json()
    assert set(js) == {"d_k", "d_tv", "argmax_y", "mc_stderr", "certified_slack"}
