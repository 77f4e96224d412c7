"""
Unit tests for the robust polynomial fit.
"""

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from numpy.polynomial import legendre
from scipy.integrate import simpson

from src.errors import ConfigError, SingularDesignError
from src.poly_interp import (
    Polynomial,
    boost_repeats,
    combine_by_median,
    generate_intervals,
    multipoint_evaluate,
    poly_max_avg_ratio,
    random_polynomial,
    robust_poly_learn,
    robust_poly_learn_boosted,
    weighted_least_squares,
)
from src.signal_core import FourierSparseSignal, NoiseSpec, SignalSource, norm_T, with_noise


class TestGenerateIntervals:
    """Test cases for the edge-biased partition."""

    def test_partition_tiles_the_interval(self):
        partition = generate_intervals(4)
        intervals = partition.intervals

        assert intervals[0, 0] == pytest.approx(-1.0)
        assert intervals[-1, 1] == pytest.approx(1.0)
        assert np.allclose(intervals[1:, 0], intervals[:-1, 1])
        assert np.all(intervals[:, 1] > intervals[:, 0])

    def test_weights_sum_to_one(self):
        partition = generate_intervals(7, eps=0.1)

        assert partition.weights.sum() == pytest.approx(1.0)

    def test_size_is_linear_in_m(self):
        for d in (1, 3, 10):
            partition = generate_intervals(d)

            assert partition.m == int(np.ceil(10 * d / 0.05))
            assert partition.n <= 20 * partition.m + 2

    def test_partition_is_symmetric(self):
        intervals = generate_intervals(2).intervals

        assert np.allclose(intervals, -intervals[::-1, ::-1])

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            generate_intervals(-1)
        with pytest.raises(ConfigError):
            generate_intervals(3, eps=0.0)

    def test_drawn_points_stay_inside(self):
        partition = generate_intervals(3)
        points = partition.draw_points(np.random.default_rng(0))

        assert np.all(points >= partition.intervals[:, 0])
        assert np.all(points <= partition.intervals[:, 1])


class TestPolynomial:
    """Test cases for the Polynomial value type."""

    def test_degree_ignores_trailing_zeros(self):
        assert Polynomial([1.0, 2.0, 0.0]).degree == 1
        assert Polynomial([]).degree == 0

    def test_scalar_evaluation(self):
        P = Polynomial([1.0, 0.0, 2.0])

        assert multipoint_evaluate(P, 0.5) == pytest.approx(1.5)
        assert isinstance(P(0.5), complex)

    def test_domain_mapping(self):
        P = Polynomial([0.0, 1.0], domain=(0.0, 4.0))

        assert P(0.0) == pytest.approx(-1.0)
        assert P(2.0) == pytest.approx(0.0)
        assert P(4.0) == pytest.approx(1.0)

    def test_invalid_basis_and_domain(self):
        with pytest.raises(ConfigError):
            Polynomial([1.0], basis="chebyshev")
        with pytest.raises(ConfigError):
            Polynomial([1.0], domain=(1.0, 1.0))

    def test_dict_round_trip(self):
        P = Polynomial([1 + 1j, -2.0], (0.0, 3.0), "legendre")
        restored = Polynomial.from_dict(P.to_dict())

        assert restored.basis == "legendre"
        assert restored.domain == (0.0, 3.0)
        assert np.array_equal(restored.coeffs, P.coeffs)

    def test_malformed_dict(self):
        with pytest.raises(ConfigError):
            Polynomial.from_dict({"re": [1.0]})

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-10, 10), min_size=1, max_size=7),
        st.lists(st.floats(-10, 10), min_size=7, max_size=7),
        st.floats(-1.0, 3.0),
    )
    def test_legendre_and_monomial_forms_agree(self, re, im, t):
        coeffs = np.array(re) + 1j * np.array(im[: len(re)])
        P = Polynomial(coeffs, (-1.0, 3.0), "legendre")

        assert P.to_monomial()(t) == pytest.approx(P(t), abs=1e-8 * (1 + np.abs(coeffs).sum()))

    def test_max_avg_ratio_of_constant(self):
        assert poly_max_avg_ratio(Polynomial([2.0], (0.0, 1.0))) == pytest.approx(1.0)
        assert poly_max_avg_ratio(Polynomial([0.0])) == 0.0


class TestWeightedLeastSquares:
    """Test cases for the least-squares solver."""

    def test_exact_line(self):
        t = np.array([0.0, 1.0, 2.0, 3.0])
        coeffs = weighted_least_squares(
            lambda s: np.column_stack([np.ones_like(s), s]), t, 2 + 3j * t, np.ones(4)
        )

        assert np.allclose(coeffs, [2.0, 3j])

    def test_too_few_samples(self):
        with pytest.raises(SingularDesignError):
            weighted_least_squares(
                lambda s: np.column_stack([np.ones_like(s), s, s ** 2]),
                np.array([0.0, 1.0]), np.zeros(2), np.ones(2),
            )

    def test_rank_deficient_design(self):
        with pytest.raises(SingularDesignError):
            weighted_least_squares(
                lambda s: np.column_stack([s, s]), np.array([0.0, 1.0, 2.0]), np.zeros(3), np.ones(3)
            )

    def test_weights_must_be_positive(self):
        with pytest.raises(ConfigError):
            weighted_least_squares(
                lambda s: s[:, None], np.array([1.0, 2.0]), np.zeros(2), np.array([1.0, 0.0])
            )


class TestRobustPolyLearn:
    """Test cases for the robust and boosted fits."""

    def setup_method(self):
        self.T = 2.0
        self.truth = Polynomial([1.0, -0.5j, 0.25, 2.0, 0.0, 0.1j], (0.0, self.T), "legendre")

    def test_noiseless_fit_is_exact(self):
        src = SignalSource(self.truth)
        fit = robust_poly_learn(src, 5, self.T, np.random.default_rng(0))

        assert fit.basis == "legendre"
        assert fit.domain == (0.0, self.T)
        assert np.allclose(fit.coeffs, self.truth.coeffs, atol=1e-8)

    def test_sample_count_matches_partition(self):
        src = SignalSource(self.truth)
        robust_poly_learn(src, 5, self.T, np.random.default_rng(1))

        assert src.samples_taken == generate_intervals(5).n

    def test_median_ignores_minority_of_bad_fits(self):
        bad = Polynomial([50.0, -30.0, 7j], (0.0, self.T), "legendre")
        polys = [self.truth] * 5 + [bad] * 2
        combined = combine_by_median(polys, 5, self.T, np.random.default_rng(2))

        assert np.allclose(combined.coeffs, self.truth.coeffs, atol=1e-8)

    def test_boost_repeats(self):
        assert boost_repeats(2.0 ** -10) == 40
        assert boost_repeats(0.5) == 4
        with pytest.raises(ConfigError):
            boost_repeats(1.0)
        with pytest.raises(ConfigError):
            boost_repeats(2.0 ** -70)

    def test_boosted_fit_under_noise(self):
        rng = np.random.default_rng(3)
        src = with_noise(SignalSource(self.truth), NoiseSpec("gaussian-white", 0.01), self.T, rng)
        fit = robust_poly_learn_boosted(src, 5, self.T, 0.25, rng)

        assert norm_T(lambda t: fit(t) - self.truth(t), self.T) < 0.1


class TestRobustPolyProperties:
    """Test cases for sampling density, equivariance and fault tolerance of the fit."""

    def setup_method(self):
        self.T = 1.0
        self.truth = Polynomial([0.5, 1.0j, -0.75, 0.2], (0.0, self.T), "legendre")

    def test_interior_widths_follow_the_edge_density(self):
        partition = generate_intervals(6)
        right = partition.intervals[partition.intervals[:, 0] >= 0][:-1]
        expected = np.sqrt(1 - right[:, 0] ** 2) / partition.m

        assert np.allclose(right[:, 1] - right[:, 0], expected)

    def test_weighted_samples_preserve_the_norm(self):
        rng = np.random.default_rng(30)
        s = np.linspace(-1.0, 1.0, 40001)
        for _ in range(10):
            d = int(rng.integers(1, 31))
            poly = random_polynomial(d, 2.0, rng)
            poly = Polynomial(poly.coeffs, (-1.0, 1.0), "legendre")
            partition = generate_intervals(d, eps=1 / 20)
            points = partition.draw_points(rng)
            sampled = np.sum(partition.weights * np.abs(poly(points)) ** 2)
            exact = simpson(np.abs(poly(s)) ** 2, x=s) / 2

            assert 0.9 <= np.sqrt(sampled / exact) <= 1.1

    def test_derivative_energy_is_bounded_by_the_degree(self):
        rng = np.random.default_rng(31)
        s = np.linspace(-1.0, 1.0, 40001)
        for d in (1, 4, 12, 25):
            coeffs = random_polynomial(d, 2.0, rng).coeffs
            values = legendre.legval(s, coeffs)
            slope = legendre.legval(s, legendre.legder(coeffs))
            weighted = simpson((1 - s ** 2) * np.abs(slope) ** 2, x=s)

            assert weighted <= 2 * d * d * simpson(np.abs(values) ** 2, x=s)

    def test_fit_commutes_with_affine_maps(self):
        tone = FourierSparseSignal([(3.3, 1.0)])
        a, b = 2.0 - 1.5j, 0.75j
        plain = robust_poly_learn(SignalSource(tone), 4, self.T, np.random.default_rng(32))
        mapped = robust_poly_learn(SignalSource(lambda t: a * tone(t) + b), 4, self.T,
                                   np.random.default_rng(32))
        expected = a * np.asarray(plain.coeffs)
        expected[0] += b

        assert np.allclose(mapped.coeffs, expected, atol=1e-8)

    def _corrupted_source(self, bad):
        calls = iter(range(100))

        def sampler(t):
            clean = self.truth(t)
            return clean + 100.0 if next(calls) in bad else clean

        return SignalSource(sampler)

    def test_minority_of_corrupted_fits_is_outvoted(self):
        assert boost_repeats(0.22) == 9
        src = self._corrupted_source({0, 2, 5, 8})
        fit = robust_poly_learn_boosted(src, 3, self.T, 0.22, np.random.default_rng(33))

        assert norm_T(lambda t: fit(t) - self.truth(t), self.T) < 1e-8

    def test_majority_of_corrupted_fits_wins(self):
        src = self._corrupted_source({0, 1, 2, 3, 4})
        fit = robust_poly_learn_boosted(src, 3, self.T, 0.22, np.random.default_rng(34))

        assert norm_T(lambda t: fit(t) - self.truth(t), self.T) == pytest.approx(100.0, rel=1e-6)
