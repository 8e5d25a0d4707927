"""Tests for pulsearea.model module."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from pulsearea.exceptions import ParameterError
from pulsearea.model import (
    Anchor,
    ModelParams,
    SolverConfig,
    Trajectory,
    make_params,
    peak_coupling_freq,
    polarization,
    to_dimensionless_time,
    to_lab_time,
)


class TestMakeParams:
    """Tests for make_params."""

    def test_default_time_scale(self):
        """Test that M^-1 = 0.5 ns gives M = 2 / ns."""
        params = make_params(0.5, 0.1)
        assert params.M == 2.0
        assert params.lam == 0.1
        assert params.mu == 1.0

    def test_lossless(self):
        """Test the identity case without dissipation."""
        params = make_params(1.0, 0.0)
        assert params.M == 1.0
        assert params.lam == 0.0

    def test_strong_dissipation(self):
        """Test lambda = 1."""
        params = make_params(0.5, 1.0)
        assert params.M == 2.0
        assert params.lam == 1.0

    @pytest.mark.parametrize("m_inv", [0.0, -0.5, math.nan, math.inf])
    def test_rejects_bad_time(self, m_inv):
        """Test that non-positive or non-finite times are rejected."""
        with pytest.raises(ParameterError):
            make_params(m_inv, 0.1)

    @pytest.mark.parametrize("lam", [-0.1, math.nan, math.inf])
    def test_rejects_bad_lambda(self, lam):
        """Test that negative or non-finite lambda is rejected."""
        with pytest.raises(ValueError):
            make_params(0.5, lam)

    @pytest.mark.parametrize("m_inv", [0.5, 0.3, 1.7, 1e-3, 123.456])
    def test_unit_round_trip(self, m_inv):
        """Test that reading M^-1 back returns the input duration."""
        assert make_params(m_inv, 0.0).M_inv_ns == pytest.approx(m_inv, rel=4 * np.finfo(float).eps)

    def test_params_are_frozen(self):
        """Test that parameters cannot be changed after construction."""
        params = make_params(0.5, 0.1)
        with pytest.raises(ValidationError):
            params.lam = 0.2

    def test_derived_factors(self):
        """Test a = lambda/2 and the 1 + lambda^2/4 factor."""
        params = make_params(0.5, 1.0)
        assert params.a == 0.5
        assert params.stretch == 1.25


class TestPeakCouplingFreq:
    """Tests for peak_coupling_freq."""

    def test_reference_value(self):
        """Test 636.6 MHz for M^-1 = 0.5 ns."""
        freq = peak_coupling_freq(make_params(0.5, 0.0))
        assert round(freq * 1000, 1) == 636.6
        assert abs(freq * 1000 / 636 - 1) <= 1e-3

    def test_pi_rate(self):
        """Test that M = pi gives exactly 1 GHz."""
        assert peak_coupling_freq(ModelParams(M=math.pi)) == pytest.approx(1.0, rel=1e-15)

    def test_unit_rate(self):
        """Test M = 1 / ns."""
        assert peak_coupling_freq(ModelParams(M=1.0)) == pytest.approx(0.3183, abs=1e-4)


class TestSolverConfig:
    """Tests for SolverConfig."""

    def test_defaults(self):
        """Test default values."""
        config = SolverConfig()
        assert config.theta_min == 1e-3
        assert config.theta_max is None
        assert config.n_grid == 2001
        assert config.abs_tol == 1e-10
        assert config.rel_tol == 1e-8
        assert config.anchor is Anchor.PI

    def test_resolved_theta_max(self):
        """Test the lambda-dependent default upper bound."""
        config = SolverConfig()
        assert config.resolved_theta_max(0.5) == 6 * math.pi
        assert config.resolved_theta_max(0.0) == 2 * math.pi - 1e-4
        assert SolverConfig(theta_max=8.0).resolved_theta_max(0.0) == 8.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"theta_min": 0.0},
            {"theta_min": 4.0},
            {"theta_max": 3.0},
            {"abs_tol": 0.0},
            {"rel_tol": 1.0},
            {"n_grid": 1},
            {"anchor": "middle"},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        """Test that invalid settings are rejected."""
        with pytest.raises(ValidationError):
            SolverConfig(**kwargs)

    def test_anchor_from_string(self):
        """Test that the anchor accepts its string value."""
        assert SolverConfig(anchor="front").anchor is Anchor.FRONT


class TestTrajectory:
    """Tests for Trajectory invariants."""

    def test_arrays_are_read_only(self, small_trajectory):
        """Test that stored arrays cannot be modified."""
        with pytest.raises(ValueError):
            small_trajectory.theta[0] = 0.0

    def test_columns(self, small_trajectory):
        """Test the stacked column layout."""
        columns = small_trajectory.columns()
        assert columns.shape == (11, 5)
        np.testing.assert_array_equal(columns[:, 3], small_trajectory.envelope)
        assert len(small_trajectory) == 11

    def _build(self, **overrides):
        params = overrides.pop("params", ModelParams(M=1.0, lam=0.5))
        tau = np.array([0.0, 1.0, 2.0])
        values = {
            "tau": tau,
            "theta": np.array([1.0, 2.0, 3.0]),
            "theta_dot": np.array([1.0, 1.0, 1.0]),
            "phi": np.array([0.0, 0.1, 0.2]),
        }
        values.update(overrides)
        values.setdefault("envelope", values["theta_dot"] / params.mu)
        return Trajectory(params=params, config=SolverConfig(), **values)

    def test_valid(self):
        """Test that a consistent trajectory is accepted."""
        assert len(self._build()) == 3

    @pytest.mark.parametrize(
        "overrides",
        [
            {"theta": np.array([1.0, 1.0, 3.0])},
            {"theta": np.array([1.0, 2.0])},
            {"theta_dot": np.array([1.0, -1.0, 1.0])},
            {"envelope": np.array([1.0, 1.0, 1.5])},
            {"phi": np.array([0.0, 0.2, 0.1])},
            {"phi": np.array([0.0, np.nan, 0.1])},
            {"tau": np.array([0.0, 2.0, 1.0])},
        ],
    )
    def test_rejects_broken_invariants(self, overrides):
        """Test that each invariant violation raises."""
        with pytest.raises(ParameterError):
            self._build(**overrides)

    def test_lossless_phase_must_be_constant(self):
        """Test that lambda = 0 trajectories need a constant phase."""
        params = ModelParams(M=1.0, lam=0.0)
        assert len(self._build(params=params, phi=np.zeros(3))) == 3
        with pytest.raises(ParameterError):
            self._build(params=params)

    def test_single_sample_rejected(self):
        """Test that fewer than two samples are rejected."""
        with pytest.raises(ParameterError):
            self._build(
                tau=np.array([0.0]),
                theta=np.array([1.0]),
                theta_dot=np.array([1.0]),
                phi=np.array([0.0]),
            )


class TestConversions:
    """Tests for unit conversions and the polarization helper."""

    def test_time_round_trip(self):
        """Test conversion to s = M*tau and back."""
        params = make_params(0.5, 0.0)
        tau = np.array([-1.0, 0.0, 2.5])
        np.testing.assert_allclose(to_dimensionless_time(tau, params), 2.0 * tau)
        np.testing.assert_allclose(to_lab_time(to_dimensionless_time(tau, params), params), tau)

    def test_polarization_lossless(self):
        """Test that lossless polarization is purely imaginary, -i sin(theta)."""
        params = make_params(0.5, 0.0)
        value = polarization(math.pi / 2, params)
        assert value.real == 0.0
        assert value.imag == pytest.approx(-1.0)

    def test_polarization_lossy(self):
        """Test the real part 1 - exp(-lambda*theta) and the damped imaginary part."""
        params = make_params(0.5, 0.5)
        theta = np.array([0.5, 2.0, 7.0])
        value = polarization(theta, params)
        np.testing.assert_allclose(value.real, 1 - np.exp(-0.5 * theta))
        np.testing.assert_allclose(value.imag, -np.sin(theta) * np.exp(-0.25 * theta))
