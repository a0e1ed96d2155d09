import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpgorge.shiftgrad import FixedOffset, RandomPair
from bpgorge.stats import (
    EnsembleStats,
    check_shift_bound,
    check_difference_bound,
    ensemble_stats,
    fit_decay,
    gorge_depth,
    tail_probability,
)


def jackknife_oracle(x):
    """Textbook delete-one loop."""
    n = len(x)
    loo = np.array([np.var(np.delete(x, i), ddof=1) for i in range(n)])
    return np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))


class TestEnsembleStats:
    def test_constant(self):
        assert ensemble_stats([1, 1, 1]).variance == 0

    def test_two_points(self):
        assert ensemble_stats([0, 2]).variance == 2

    def test_too_few(self):
        with pytest.raises(ValueError):
            ensemble_stats([1.0])

    def test_sin_uniform(self):
        x = np.sin(np.random.default_rng(0).uniform(0, 2 * np.pi, 10**5))
        s = ensemble_stats(x)
        assert abs(s.variance - 0.5) < 3 * s.variance_std_error

    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40))
    def test_matches_numpy_and_loop_jackknife(self, xs):
        x = np.array(xs)
        s = ensemble_stats(x)
        assert s.variance == pytest.approx(np.var(x, ddof=1), rel=1e-9, abs=1e-9)
        assert s.variance_std_error == pytest.approx(jackknife_oracle(x), rel=1e-6, abs=1e-6)
        assert s.variance >= 0 and s.min == x.min() and s.max == x.max()


class TestTail:
    def test_all_at_center(self):
        assert tail_probability(np.full(10, 0.3), 0.3, 0.1).empirical_probability == 0

    def test_step_landscape_quarter(self):
        # step-landscape value mix: 0 w.p. 1/4, 0.5 w.p. 1/4, 1 w.p. 1/2 has mean 5/8
        x = np.repeat([0.0, 0.5, 1.0], [1, 1, 2])
        assert x.mean() == 5 / 8
        assert tail_probability(x, 5 / 8, 0.5).empirical_probability == pytest.approx(1 / 4)

    def test_bounded_range(self):
        x = np.cos(np.random.default_rng(1).uniform(0, 6, 1000))
        assert tail_probability(x, 0.0, 1.5).empirical_probability == 0

    def test_threshold_positive(self):
        with pytest.raises(ValueError):
            tail_probability([1, 2], 0, 0)

    @given(st.integers(0, 2**31), st.floats(0.05, 3))
    def test_chebyshev_consistency(self, seed, c):
        x = np.random.default_rng(seed).standard_t(5, size=2000)
        t = tail_probability(x, float(np.mean(x)), c)
        assert t.consistent


class TestDifferenceBound:
    def test_cos_pi(self):
        r = check_difference_bound([0.5], 2.0, 1, np.pi)
        assert r.lhs == 2 and r.rhs == pytest.approx(np.pi**2 / 2) and r.holds
        assert r.slack_ratio == pytest.approx(np.pi**2 / 4)

    def test_zero_length(self):
        r = check_difference_bound([0.5], 0.0, 1, 0.0)
        assert r.lhs == 0 and r.rhs == 0 and r.holds

    def test_uses_largest_variance(self):
        r = check_difference_bound([0.1, 0.4, 0.2], 1.0, 2, 1.0)
        assert r.rhs == pytest.approx(4 * 0.4)

    def test_violation_reported(self):
        assert not check_difference_bound([1e-4], 1.0, 1, 1.0).holds

    def test_empty(self):
        with pytest.raises(ValueError):
            check_difference_bound([], 1.0, 1, 1.0)


class TestShiftBound:
    def test_cos_equality(self):
        r = check_shift_bound(2.0, 0.5, FixedOffset.along(np.pi, 1, 0))
        assert r.lhs == 0.5 and r.rhs == 0.5 and r.holds

    def test_constant(self):
        assert check_shift_bound(0.0, 0.0).holds

    def test_mode_checked(self):
        with pytest.raises(ValueError):
            check_shift_bound(1.0, 0.1, RandomPair())
        with pytest.raises(ValueError):
            check_shift_bound(1.0, 0.1, FixedOffset.along(1.0, 3, 0))
        with pytest.raises(ValueError):
            check_shift_bound(1.0, 0.1, FixedOffset(np.pi, np.ones(2) / np.sqrt(2)))


class TestFitDecay:
    def test_exact_exponential(self):
        pts = [(n, (3 / 8) ** n, 0.0) for n in range(2, 11)]
        f = fit_decay(pts)
        assert f.base == pytest.approx(8 / 3)
        assert f.r_squared == pytest.approx(1.0)
        assert f.exponential

    def test_polynomial_local(self):
        pts = [(n, 1 / (8 * n * n), 0.0) for n in range(2, 11, 2)]
        assert fit_decay(pts).classification == "non-exponential"

    def test_polynomial_full_range(self):
        pts = [(n, 1 / (8 * n * n), 0.0) for n in range(2, 11)]
        assert not fit_decay(pts).exponential

    @given(st.floats(1.2, 6), st.floats(0.01, 10))
    def test_recovers_planted_base(self, b, a):
        pts = [(n, a * b ** (-n), 0.0) for n in range(2, 13)]
        assert fit_decay(pts).base == pytest.approx(b, rel=0.05)

    def test_constant_is_not_exponential(self):
        f = fit_decay([(n, 0.25, 0.01) for n in (2, 4, 6, 8)])
        assert not f.exponential
        assert f.base_ci[0] <= 1 <= f.base_ci[1]

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_decay([(1, 1.0, 0.1), (2, 0.5, 0.1)])
        with pytest.raises(ValueError):
            fit_decay([(1, 1.0, 0.1), (2, 0.0, 0.1), (3, 0.1, 0.1)])

    def test_weighted_noisy_exponential(self):
        rng = np.random.default_rng(4)
        pts = []
        for n in range(2, 11, 2):
            v = 0.3 * 2.5 ** (-n)
            pts.append((n, v * (1 + 0.05 * rng.normal()), 0.05 * v))
        f = fit_decay(pts)
        assert f.exponential and f.base_ci[0] < 2.5 < f.base_ci[1]

    def test_slope_overlap(self):
        a = fit_decay([(n, 2.0 ** -n, 0.1 * 2.0 ** -n) for n in (2, 4, 6, 8)])
        b = fit_decay([(n, 3 * 2.0 ** -n, 0.1 * 2.0 ** -n) for n in (2, 4, 6, 8)])
        c = fit_decay([(n, 5.0 ** -n, 0.01 * 5.0 ** -n) for n in (2, 4, 6, 8)])
        assert a.slopes_overlap(b) and not a.slopes_overlap(c)


class TestGorgeDepth:
    def test_constant(self):
        g = gorge_depth(np.full(100, 0.4), 0.4)
        assert g.depth == 0 and g.label == "concentrated-no-gorge"

    def test_global_cost_depth(self):
        n = 4
        rng = np.random.default_rng(0)
        th = rng.uniform(0, 2 * np.pi, (10**5, n))
        c = 1 - np.prod(np.cos(th / 2) ** 2, axis=1)
        g = gorge_depth(c, 0.0, concentrated=True)
        assert g.depth == pytest.approx(1 - 2.0**-n, abs=3 * c.std() / np.sqrt(len(c)))
        assert g.label == "narrow gorge"

    def test_local_cost_depth(self):
        th = np.random.default_rng(1).uniform(0, 2 * np.pi, (10**5, 6))
        c = 1 - np.mean(np.cos(th / 2) ** 2, axis=1)
        g = gorge_depth(c, 0.0, concentrated=False)
        assert g.depth == pytest.approx(0.5, abs=3 * c.std() / np.sqrt(len(c)))
        assert g.label == "neither"

    def test_empty(self):
        with pytest.raises(ValueError):
            gorge_depth([], 0.0)


def test_exact_stats_helper():
    e = EnsembleStats.exact(0.25)
    assert e.variance == 0.25 and e.variance_std_error == 0
