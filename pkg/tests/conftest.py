"""Shared test fixtures for PulseArea tests."""

import json
import math
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from pulsearea.model import ModelParams, SolverConfig, Trajectory, make_params
from pulsearea.solver import Route, build_route

SWEEP = (0.0, 0.1, 0.25, 0.5, 1.0)
M_INV_NS = 0.5


@pytest.fixture(scope="session")
def solver_config() -> SolverConfig:
    """Provide the default solver configuration."""
    return SolverConfig()


@pytest.fixture(scope="session")
def route_cache(solver_config: SolverConfig) -> Callable[..., Route]:
    """Provide a solved-route lookup keyed by (lambda, method, config), solving each once per session."""
    cache: dict[tuple, Route] = {}

    def get(lam: float, method: str = "quadrature", config: SolverConfig | None = None) -> Route:
        config = config or solver_config
        key = (lam, method, config)
        if key not in cache:
            cache[key] = build_route(make_params(M_INV_NS, lam), config, method)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def trajectories(route_cache: Callable[..., Route]) -> dict[float, Trajectory]:
    """Provide default quadrature trajectories for every sweep lambda."""
    return {lam: route_cache(lam).trajectory() for lam in SWEEP}


@pytest.fixture(scope="session")
def soliton_trajectory(trajectories: dict[float, Trajectory]) -> Trajectory:
    """Provide the lossless trajectory."""
    return trajectories[0.0]


@pytest.fixture
def soliton_params() -> ModelParams:
    """Provide lossless parameters with M = 2 / ns."""
    return make_params(M_INV_NS, 0.0)


@pytest.fixture
def small_trajectory() -> Trajectory:
    """Provide a short synthetic lossy trajectory built from closed-form values."""
    params = ModelParams(M=2.0, lam=0.5)
    tau = np.linspace(-1.0, 1.0, 11)
    theta = math.pi + np.arctan(tau)
    theta_dot = 1.0 / (1.0 + tau**2)
    return Trajectory(
        tau=tau,
        theta=theta,
        theta_dot=theta_dot,
        envelope=theta_dot / params.mu,
        phi=0.1 * (tau + 1.0),
        params=params,
        config=SolverConfig(),
    )


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[dict], Path]:
    """Provide a helper that writes a JSON config file and returns its path."""

    def write(data: dict) -> Path:
        path = tmp_path / "pulsearea.json"
        path.write_text(json.dumps(data))
        return path

    return write
