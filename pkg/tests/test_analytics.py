from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gknn.analytics import (
    annual_moments,
    base_error_bound,
    base_error_map,
    expected_month_error,
    expected_month_yield,
    moment_report,
    month_variance,
    series_class_stats,
    total_expected_error,
)
from gknn.core import (
    ComponentAbsDiff,
    MetricSpec,
    RankDistribution,
    TrainingSet,
    gknn_simulate_runs,
    rank_neighbors,
)

ABS0 = MetricSpec(ComponentAbsDiff(0))


def ranked_fixture(yields):
    """Training set whose ranking from v=0 is simply index order."""
    n = len(yields)
    return TrainingSet(np.arange(n, dtype=float), yields), np.arange(n)


def exact_moments(u, p):
    """Mean and variance in exact rational arithmetic."""
    u = [Fraction(x) for x in u]
    mean = sum(pi * ui for pi, ui in zip(p, u))
    var = sum(pi * (ui - mean) ** 2 for pi, ui in zip(p, u))
    return mean, var


def test_ranked_10_20_30_harmonic():
    ts, perm = ranked_fixture([10.0, 20.0, 30.0])
    rd = RankDistribution.harmonic(3, 3)
    mean, var = exact_moments([10, 20, 30], [Fraction(6, 11), Fraction(3, 11), Fraction(2, 11)])
    assert mean == Fraction(180, 11)
    assert expected_month_yield(perm, ts, rd) == pytest.approx(float(mean), rel=1e-15)
    assert month_variance(perm, ts, rd) == pytest.approx(float(var), rel=1e-13)
    assert float(var) == pytest.approx(59.504, abs=5e-4)


def test_variance_against_monte_carlo():
    ts, _ = ranked_fixture([10.0, 20.0, 30.0])
    rd = RankDistribution.harmonic(3, 3)
    y = gknn_simulate_runs([[0.0]], ts, ABS0, rd, seed=17, run_indices=np.arange(1, 10**6 + 1))[:, 0]
    var = month_variance(np.arange(3), ts, rd)
    m4 = np.mean((y - y.mean()) ** 4)
    se = np.sqrt((m4 - var**2) / y.size)
    assert abs(y.var(ddof=1) - var) < 4 * se


def test_degenerate_cases():
    ts, perm = ranked_fixture([10.0, 20.0, 30.0])
    one = RankDistribution.top_k_uniform(1, 3)
    assert expected_month_yield(perm, ts, one) == 10.0
    assert month_variance(perm, ts, one) == 0.0
    flat, perm = ranked_fixture([7.0] * 5)
    for rd in (RankDistribution.harmonic(4, 5), RankDistribution.explicit([0.1, 0.2, 0.3, 0.4])):
        assert expected_month_yield(perm, flat, rd) == pytest.approx(7.0, rel=1e-15)
        assert month_variance(perm, flat, rd) == pytest.approx(0.0, abs=1e-24)


def test_size_mismatch():
    ts, _ = ranked_fixture([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        expected_month_yield(np.arange(2), ts, RankDistribution.harmonic(3, 3))


def test_expected_month_error_cases():
    ts, perm = ranked_fixture([10.0, 20.0, 30.0])
    rd = RankDistribution.harmonic(3, 3)
    mean = expected_month_yield(perm, ts, rd)
    mm = expected_month_error(perm, ts, rd, mean)
    assert mm.expected_error == mm.variance and mm.bias_sq == 0
    mm = expected_month_error(perm, ts, RankDistribution.top_k_uniform(1, 3), 13.0)
    assert mm.expected_error == 9.0 and mm.variance == 0.0
    with pytest.raises(ValueError):
        expected_month_error(perm, ts, rd, -1.0)


def test_expected_error_matches_direct_sum():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = rng.integers(2, 20)
        ts, perm = ranked_fixture(rng.random(n) * 1000)
        k = rng.integers(1, n + 1)
        rd = RankDistribution.harmonic(k, n)
        z = rng.random() * 1000
        mm = expected_month_error(perm, ts, rd, z)
        direct = float(np.dot(rd.support, (ts.yields[:k] - z) ** 2))
        assert mm.expected_error == pytest.approx(direct, rel=1e-12)
        assert mm.expected_error - mm.variance - mm.bias_sq == pytest.approx(0, abs=1e-12 * mm.expected_error)


def test_expected_error_monte_carlo(tank_fixture):
    ts, m, v, z = tank_fixture
    rd = RankDistribution.harmonic(3, ts.n)
    R = 10**5
    y = gknn_simulate_runs(v, ts, m, rd, seed=5, run_indices=np.arange(1, R + 1))
    e = (y - z) ** 2
    rep = moment_report(v, ts, m, rd, z)
    se = e.std(axis=0, ddof=1) / np.sqrt(R)
    zs = (e.mean(axis=0) - rep.expected_errors) / se
    assert np.all(np.abs(zs) < 4)
    tot = e.sum(axis=1)
    assert abs(tot.mean() - total_expected_error(v, ts, m, rd, z)) < 3 * tot.std(ddof=1) / np.sqrt(R)


def test_total_error_cases():
    ts = TrainingSet([0.0, 1.0, 2.0], [4.0, 4.0, 4.0])
    rd = RankDistribution.harmonic(3, 3)
    assert total_expected_error([[0.5]], ts, ABS0, rd, [4.0]) == 0.0
    ts, _ = ranked_fixture([10.0, 20.0, 30.0])
    e1 = total_expected_error([[0.0]], ts, ABS0, rd, [12.0])
    assert total_expected_error([[0.0]] * 7, ts, ABS0, rd, [12.0] * 7) == pytest.approx(7 * e1, rel=1e-14)
    with pytest.raises(ValueError):
        total_expected_error([[0.0]] * 2, ts, ABS0, rd, [1.0])


def test_base_error_map_is_month_variance():
    rng = np.random.default_rng(1)
    ts = TrainingSet(rng.random(40), rng.random(40) * 10)
    rd = RankDistribution.harmonic(5, 40)
    for v in rng.random(20):
        r = rank_neighbors([v], ts, ABS0)
        assert base_error_map([v], ts, ABS0, rd) == month_variance(r, ts, rd)
    flat = TrainingSet(rng.random(10), np.full(10, 3.0))
    assert base_error_map([0.3], flat, ABS0, RankDistribution.harmonic(4, 10)) == pytest.approx(0, abs=1e-28)


@settings(max_examples=300, deadline=None)
@given(
    u=st.lists(st.floats(0, 1e4), min_size=1, max_size=25),
    v=st.floats(-2, 30),
    k=st.integers(1, 25),
)
def test_base_error_bounds(u, v, k):
    n = len(u)
    k = min(k, n)
    ts = TrainingSet(np.arange(n, dtype=float), u)
    e = base_error_map([v], ts, ABS0, RankDistribution.harmonic(k, n))
    sharp = base_error_bound(ts, sharp=True)
    assert -1e-9 <= e <= sharp * (1 + 1e-12) + 1e-9
    assert sharp <= base_error_bound(ts)


# ---------------------------------------------------------------- annual


def test_annual_deterministic_method():
    rng = np.random.default_rng(2)
    ts = TrainingSet(rng.random(30), rng.random(30) * 100)
    v = rng.random(24)
    a = annual_moments(v, ts, ABS0, RankDistribution.top_k_uniform(1, 30))
    nn = [ts.yields[rank_neighbors([x], ts, ABS0).permutation[0]] for x in v]
    assert a.variance == 0 and a.variance_constant == 0 and a.bound_ok
    assert a.expected_annual_yield == pytest.approx(sum(nn) / 2, rel=1e-14)


def test_single_class_bound_is_tight():
    ts, _ = ranked_fixture([10.0, 20.0, 30.0])
    rd = RankDistribution.harmonic(3, 3)
    sigma2 = month_variance(np.arange(3), ts, rd)
    for m in (1, 3, 10):
        a = annual_moments(np.zeros(12 * m), ts, ABS0, rd)
        assert a.variance == pytest.approx(12 * sigma2 / m, rel=1e-13)
        assert a.variance_constant == pytest.approx(12 * sigma2, rel=1e-13)
        assert a.variance == pytest.approx(a.bound, rel=1e-13)
        assert a.total_yield_variance == m**2 * a.variance


def test_annual_requires_whole_years():
    ts, _ = ranked_fixture([1.0, 2.0])
    with pytest.raises(ValueError, match="whole number"):
        annual_moments(np.zeros(13), ts, ABS0, RankDistribution.harmonic(2, 2))


def test_grouped_equals_ungrouped():
    rng = np.random.default_rng(3)
    ts = TrainingSet(rng.integers(0, 10, 50).astype(float), rng.random(50) * 100)
    rd = RankDistribution.harmonic(4, 50)
    v = rng.integers(0, 10, 60).astype(float)
    a = annual_moments(v, ts, ABS0, rd)
    per_t = [month_variance(rank_neighbors([x], ts, ABS0), ts, rd) for x in v]
    assert a.variance == pytest.approx(sum(per_t) / 25, rel=1e-12)
    # grouped form: sum over classes of class variance times visit count
    _, var_t, cls, classes = series_class_stats(v, ts, ABS0, rd)
    counts = np.bincount(cls)
    class_var = np.array([var_t[cls == c][0] for c in range(len(classes))])
    assert a.variance == pytest.approx(float(class_var @ counts) / 25, rel=1e-12)


def test_translation_equivariance():
    rng = np.random.default_rng(4)
    u = rng.random(30) * 100
    w = rng.random(30)
    rd = RankDistribution.harmonic(5, 30)
    v = rng.random(24)
    a = moment_report(v, TrainingSet(w, u), ABS0, rd)
    b = moment_report(v, TrainingSet(w, u + 250.0), ABS0, rd)
    np.testing.assert_allclose(b.expected_yields, a.expected_yields + 250.0, rtol=1e-13)
    np.testing.assert_allclose(b.variances, a.variances, rtol=1e-9, atol=1e-9)


def test_report_without_actuals():
    ts, _ = ranked_fixture([1.0, 2.0, 3.0])
    rep = moment_report(np.zeros(5), ts, ABS0, RankDistribution.harmonic(2, 3))
    assert rep.annual is None
    assert rep.months[0].bias_sq is None and rep.months[0].expected_error is None
    assert rep.expected_errors is None and rep.total_expected_error is None
