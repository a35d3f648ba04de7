"""Tests for the error functionals and estimators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import wasserstein_distance as scipy_w1

from cbopt.metrics import (
    RateFit,
    SuccessCriterion,
    consensus_rmse,
    equalize_sizes,
    loglog_slope,
    quantile_band,
    subsample_rows,
    success_rate,
    wasserstein_1d,
    wasserstein_1d_unequal,
)


class TestWasserstein1d:
    def test_identity(self):
        x = np.random.default_rng(0).normal(size=100)
        assert wasserstein_1d(x, x.copy(), p=1) == 0.0
        assert wasserstein_1d(x, x.copy(), p=2) == 0.0

    def test_dirac_translation(self):
        a = np.zeros(7)
        b = np.full(7, -2.5)
        assert wasserstein_1d(a, b, p=1) == pytest.approx(2.5)
        assert wasserstein_1d(a, b, p=2) == pytest.approx(2.5)

    def test_hand_paired_example(self):
        assert wasserstein_1d([0.0, 1.0], [0.0, 2.0], p=1) == pytest.approx(0.5)

    def test_column_vectors_accepted(self):
        a = np.array([[0.0], [1.0]])
        b = np.array([[2.0], [0.0]])
        assert wasserstein_1d(a, b, p=1) == pytest.approx(0.5)

    def test_multidimensional_rejected(self):
        with pytest.raises(ValueError, match="1-dimensional"):
            wasserstein_1d(np.zeros((4, 2)), np.zeros((4, 2)))

    def test_unequal_sizes_rejected(self):
        with pytest.raises(ValueError, match="subsample"):
            wasserstein_1d(np.zeros(3), np.zeros(4))

    def test_invalid_p(self):
        with pytest.raises(ValueError):
            wasserstein_1d(np.zeros(3), np.zeros(3), p=3)

    def test_metric_axioms_random_triples(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = rng.integers(2, 40)
            a, b, c = rng.normal(size=(3, n)) * rng.uniform(0.5, 3)
            for p in (1, 2):
                dab = wasserstein_1d(a, b, p)
                dba = wasserstein_1d(b, a, p)
                assert dab == pytest.approx(dba, abs=1e-12)
                assert wasserstein_1d(a, a, p) <= 1e-12
                dac = wasserstein_1d(a, c, p)
                dcb = wasserstein_1d(c, b, p)
                assert dab <= dac + dcb + 1e-12

    def test_w1_le_w2(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            a, b = rng.normal(size=(2, 30))
            assert wasserstein_1d(a, b, 1) <= wasserstein_1d(a, b, 2) + 1e-14


class TestWassersteinUnequal:
    def test_matches_equal_size_coupling(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(2, 64))
        for p in (1, 2):
            assert wasserstein_1d_unequal(a, b, p) == pytest.approx(
                wasserstein_1d(a, b, p), rel=1e-12)

    def test_matches_scipy_for_p1(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=37)
        b = rng.normal(size=90) + 0.3
        assert wasserstein_1d_unequal(a, b, p=1) == pytest.approx(scipy_w1(a, b), rel=1e-10)

    def test_dirac_vs_pair(self):
        # transport 0 -> {0 (mass 1/2), 1 (mass 1/2)}
        assert wasserstein_1d_unequal([0.0], [0.0, 1.0], p=1) == pytest.approx(0.5)


class TestSubsampling:
    def test_subsample_deterministic(self):
        pts = np.arange(20.0)[:, None]
        a = subsample_rows(pts, 5, np.random.default_rng(8))
        b = subsample_rows(pts, 5, np.random.default_rng(8))
        assert np.array_equal(a, b)

    def test_subsample_full_is_identity(self):
        pts = np.arange(5.0)[:, None]
        assert subsample_rows(pts, 5, np.random.default_rng(0)) is pts

    def test_oversample_rejected(self):
        with pytest.raises(ValueError):
            subsample_rows(np.zeros((3, 1)), 4, np.random.default_rng(0))

    def test_equalize_shrinks_larger_side(self):
        rng = np.random.default_rng(1)
        a, b = np.zeros((10, 1)), np.ones((25, 1))
        ea, eb = equalize_sizes(a, b, rng)
        assert ea.shape == eb.shape == (10, 1)
        eb2, ea2 = equalize_sizes(b, a, rng)
        assert ea2.shape == eb2.shape == (10, 1)


class TestConsensusRmse:
    def test_zero_for_equal_pairs(self):
        pairs = [[(np.array([1.0, 2.0]), np.array([1.0, 2.0]))] * 3] * 4
        assert consensus_rmse(pairs) == 0.0

    def test_single_pair_scalar(self):
        assert consensus_rmse([[(1.0, 0.0)]]) == pytest.approx(1.0)

    def test_two_group_hand_value(self):
        pairs = [
            [(1.0, 1.0)],          # inner-mean gap 0
            [(3.0, 1.0)],          # inner-mean gap 2
        ]
        assert consensus_rmse(pairs) == pytest.approx(np.sqrt(2.0))

    def test_inner_mean_before_square(self):
        # gaps +1 and -1 cancel in the inner mean
        pairs = [[(1.0, 0.0), (-1.0, 0.0)]]
        assert consensus_rmse(pairs) == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        pairs = [[(rng.normal(size=2), rng.normal(size=2)) for _ in range(4)]
                 for _ in range(6)]
        base = consensus_rmse(pairs)
        shuffled = [pairs[i] for i in rng.permutation(6)]
        shuffled = [[g[i] for i in rng.permutation(4)] for g in shuffled]
        assert consensus_rmse(shuffled) == pytest.approx(base, rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            consensus_rmse([])
        with pytest.raises(ValueError):
            consensus_rmse([[]])


class TestSuccessRate:
    def test_exact_hits(self):
        crit = SuccessCriterion(0.1, np.array([1.0, -1.0]))
        cands = np.tile([1.0, -1.0], (5, 1))
        assert success_rate(cands, crit) == 1.0

    def test_strict_inequality_on_boundary(self):
        crit = SuccessCriterion(0.5, np.array([0.0]))
        assert success_rate(np.array([[0.5]]), crit) == 0.0
        assert success_rate(np.array([[0.49999]]), crit) == 1.0

    def test_fraction(self):
        crit = SuccessCriterion(1.0, np.array([0.0]))
        cands = np.array([[0.2], [-0.9], [3.0], [0.0]])
        assert success_rate(cands, crit) == pytest.approx(0.75)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=30),
           st.floats(0.01, 2.0), st.floats(0.01, 2.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_threshold(self, xs, thr_a, thr_b):
        lo, hi = sorted((thr_a, thr_b))
        cands = np.array(xs)[:, None]
        x_star = np.array([0.3])
        assert (success_rate(cands, SuccessCriterion(lo, x_star))
                <= success_rate(cands, SuccessCriterion(hi, x_star)))

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            SuccessCriterion(0.0, np.array([0.0]))


class TestLoglogSlope:
    def test_exact_power_law(self):
        scales = np.array([10.0, 100.0, 1000.0, 10000.0])
        errors = 3.7 * scales**-0.5
        fit = loglog_slope(zip(scales, errors))
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(np.log(3.7), abs=1e-12)

    def test_two_point_line(self):
        fit = loglog_slope([(100.0, 1.0), (10000.0, 0.1)])
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)

    def test_constant_errors(self):
        fit = loglog_slope([(10.0, 2.0), (100.0, 2.0), (1000.0, 2.0)])
        assert fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            loglog_slope([(10.0, 1.0)])
        with pytest.raises(ValueError):
            loglog_slope([(10.0, 1.0), (10.0, 2.0)])
        with pytest.raises(ValueError):
            loglog_slope([(10.0, 0.0), (100.0, 1.0)])
        with pytest.raises(ValueError):
            loglog_slope([(-10.0, 1.0), (100.0, 1.0)])

    def test_points_recorded(self):
        pts = [(10.0, 1.0), (100.0, 0.5)]
        assert loglog_slope(pts).points == ((10.0, 1.0), (100.0, 0.5))


class TestQuantileBand:
    def test_constant_list(self):
        assert quantile_band([3.3] * 9) == (3.3, 3.3)

    def test_linear_interpolation_1_to_100(self):
        lo, hi = quantile_band(np.arange(1.0, 101.0))
        assert lo == pytest.approx(15.85)
        assert hi == pytest.approx(85.15)

    def test_collapsed_band_is_median(self):
        vals = [1.0, 2.0, 10.0]
        lo, hi = quantile_band(vals, 0.5, 0.5)
        assert lo == hi == pytest.approx(2.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            quantile_band([])
