"""Tests for pulsearea.area module."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulsearea.area import (
    RadicandCounter,
    area_bracket,
    phase_density,
    rate,
    tau_integrand,
    theta_dot,
)
from pulsearea.exceptions import DomainError, RadicandError
from pulsearea.model import ModelParams, make_params, polarization


def naive_bracket(theta, lam):
    return 2.0 - np.exp(-0.5 * lam * theta) * (2.0 * np.cos(theta) + lam * np.sin(theta))


class TestAreaBracket:
    """Tests for area_bracket."""

    def test_half_turn_lossless(self):
        """Test B(pi; 0) = 4."""
        assert area_bracket(math.pi, 0.0) == pytest.approx(4.0, rel=1e-15)

    def test_vanishes_at_origin(self):
        """Test B(0; lambda) = 0."""
        assert area_bracket(0.0, 0.5) == 0.0

    def test_small_angle_series(self):
        """Test B ~ (1 + lambda^2/4) theta^2 for tiny theta."""
        assert area_bracket(1e-4, 1.0) == pytest.approx(1.25e-8, rel=1e-2)
        assert area_bracket(1e-4, 1.0) == pytest.approx(1.25e-8 * (1 - 1e-4 / 3), rel=1e-8)

    def test_lossless_closed_form(self):
        """Test that lambda = 0 gives 4 sin^2(theta/2) on both sides of the series crossover."""
        theta = np.linspace(1e-4, 2 * math.pi, 500)
        np.testing.assert_allclose(area_bracket(theta, 0.0), 4 * np.sin(theta / 2) ** 2, rtol=1e-12, atol=1e-30)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 1.0, 4.0])
    def test_matches_naive_away_from_origin(self, lam):
        """Test agreement with the textbook form where it does not cancel."""
        theta = np.linspace(0.5, 20.0, 200)
        np.testing.assert_allclose(area_bracket(theta, lam), naive_bracket(theta, lam), rtol=1e-12)

    @pytest.mark.parametrize("lam", [0.0, 0.25, 1.0, 10.0])
    def test_continuous_at_crossover(self, lam):
        """Test that series and direct forms meet at the switch point."""
        limit = 0.05 / max(1.0, math.hypot(lam / 2, 1.0))
        below = area_bracket(limit * (1 - 1e-9), lam)
        above = area_bracket(limit * (1 + 1e-9), lam)
        assert above == pytest.approx(below, rel=1e-7)

    def test_scalar_and_array(self):
        """Test that scalars give floats and arrays give arrays."""
        assert isinstance(area_bracket(1.0, 0.5), float)
        assert area_bracket(np.array([1.0, 2.0]), 0.5).shape == (2,)

    def test_rejects_negative(self):
        """Test that negative theta raises DomainError."""
        with pytest.raises(DomainError):
            area_bracket(-0.1, 0.5)

    @given(st.floats(0.0, 60.0), st.floats(0.0, 5.0))
    @settings(max_examples=300, deadline=None)
    def test_non_negative(self, theta, lam):
        """Test B >= 0 on the solution branch."""
        assert area_bracket(theta, lam) >= 0.0

    @given(st.floats(1e-6, 0.04), st.floats(0.0, 2.0))
    @settings(max_examples=200, deadline=None)
    def test_series_leading_order(self, theta, lam):
        """Test the first two series terms (1 + a^2) theta^2 (1 - 2a theta/3)."""
        a = lam / 2
        expected = (1 + a * a) * theta**2 * (1 - 2 * a * theta / 3)
        assert area_bracket(theta, lam) == pytest.approx(expected, rel=2 * theta**2 + 1e-12)


class TestThetaDot:
    """Tests for theta_dot and rate."""

    def test_peak_lossless(self):
        """Test theta_dot(pi) = 2M at lambda = 0."""
        assert theta_dot(math.pi, make_params(0.5, 0.0)) == pytest.approx(4.0, rel=1e-15)

    def test_plateau(self):
        """Test the far-tail plateau M sqrt(2/(1 + lambda^2/4))."""
        value = theta_dot(40 * math.pi, make_params(0.5, 1.0))
        assert value == pytest.approx(2 * math.sqrt(2 / 1.25), rel=1e-12)
        assert value == pytest.approx(2.5298, abs=1e-4)

    def test_closes_at_two_pi(self):
        """Test that the lossless rate vanishes at 2*pi."""
        assert theta_dot(2 * math.pi, make_params(0.5, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_lossless_first_integral(self):
        """Test theta_dot = 2M sin(theta/2) on [0, 2*pi]."""
        theta = np.linspace(1e-5, 2 * math.pi - 1e-3, 1000)
        np.testing.assert_allclose(theta_dot(theta, make_params(0.5, 0.0)), 4 * np.sin(theta / 2), rtol=1e-12)

    def test_clamps_roundoff(self, mocker):
        """Test that tiny negative radicands are clamped and counted."""
        mocker.patch("pulsearea.area.area_bracket", return_value=np.array([-1e-13, 1.0]))
        counter = RadicandCounter()
        result = rate(np.array([1.0, 2.0]), 0.0, counter)
        np.testing.assert_array_equal(result, [0.0, 1.0])
        assert counter.clamped == 1

    def test_rejects_negative_radicand(self, mocker):
        """Test that clearly negative radicands raise RadicandError."""
        mocker.patch("pulsearea.area.area_bracket", return_value=np.array([-1e-6]))
        with pytest.raises(RadicandError):
            rate(np.array([1.0]), 0.0)


class TestPhaseDensity:
    """Tests for the phase integrand."""

    def test_lossless_is_zero(self):
        """Test that the phase never moves at lambda = 0."""
        np.testing.assert_array_equal(phase_density(np.linspace(0.1, 6.0, 10), 0.0), 0.0)

    def test_large_area_limit(self):
        """Test d(phi)/d(theta) -> (1 + lambda^2/4)/2."""
        assert phase_density(40 * math.pi, 1.0) == pytest.approx(0.625, rel=1e-12)

    def test_matches_hyperbolic_form(self):
        """Test equivalence with (1 + a^2) sinh(a theta) / (e^(a theta) - cos(theta) - a sin(theta))."""
        lam, a = 0.5, 0.25
        theta = np.linspace(0.5, 10.0, 100)
        expected = (1 + a * a) * np.sinh(a * theta) / (np.exp(a * theta) - np.cos(theta) - a * np.sin(theta))
        np.testing.assert_allclose(phase_density(theta, lam), expected, rtol=1e-12)

    def test_positive(self):
        """Test that the density is positive for lambda > 0."""
        assert np.all(phase_density(np.linspace(1e-3, 30.0, 500), 0.3) > 0)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 2.0])
    def test_real_part_of_polarization(self, lam):
        """Test d(phi)/d(theta) = (1 + lambda^2/4) Re(P) / (mu B)."""
        params = ModelParams(M=2.0, lam=lam, mu=1.5)
        theta = np.linspace(0.05, 20.0, 200)
        expected = params.stretch * polarization(theta, params).real / (params.mu * area_bracket(theta, lam))
        np.testing.assert_allclose(phase_density(theta, lam), expected, rtol=1e-12)


class TestRegularisedIntegrands:
    """Tests for the regularised time integrand."""

    def test_finite_near_origin(self):
        """Test the lambda/6 limit of the regularised time integrand at small theta."""
        assert tau_integrand(1e-5, 0.5) == pytest.approx(0.25 / 3, abs=1e-4)

    def test_lossless_limit_near_origin(self):
        """Test the -1/(2 pi) limit at lambda = 0."""
        assert tau_integrand(1e-5, 0.0) == pytest.approx(-1 / (2 * math.pi), abs=1e-5)

    def test_lossless_finite_near_two_pi(self):
        """Test that the lambda = 0 integrand stays finite next to 2*pi."""
        value = tau_integrand(2 * math.pi - 1e-5, 0.0)
        assert math.isfinite(value)
        assert abs(value) < 1.0
