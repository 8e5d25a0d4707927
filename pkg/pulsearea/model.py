"""Physical parameters, solver settings and the trajectory container.

The solver works in dimensionless time s = M*tau with the envelope measured in
units of M/mu. Everything crossing the public API is in laboratory units
(ns, rad, rad/ns) and is converted here.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import ParameterError

DEFAULT_M_INV_NS = 0.5
DEFAULT_OMEGA_Z = 2.0 * math.pi * 5.0
DEFAULT_THETA_MIN = 1e-3
DEFAULT_SOLITON_GAP = 1e-4
LOSSY_THETA_MAX = 6.0 * math.pi


class Anchor(str, Enum):
    """Convention fixing the free time and phase offsets of a trajectory.

    PI puts tau = 0 and phi = 0 at theta = pi. FRONT registers every curve on the
    leading edge of the lossless soliton: tau(theta_min) = M^-1 ln tan(theta_min/4)
    and phi(theta_min) = 0.
    """

    PI = "pi"
    FRONT = "front"


class Method(str, Enum):
    """Numerical route used to build a trajectory."""

    QUADRATURE = "quadrature"
    IVP = "ivp"


class ModelParams(BaseModel):
    """Physical parameters of one run.

    Attributes:
        M: Characteristic rate in 1/ns.
        lam: Dimensionless dissipation scale factor.
        mu: Dipole moment, converts theta_dot to envelope.
        omega_z: Qubit transition angular frequency in rad/ns (metadata only).
    """

    model_config = ConfigDict(frozen=True)

    M: float = Field(gt=0, allow_inf_nan=False)
    lam: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    mu: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    omega_z: float = Field(default=DEFAULT_OMEGA_Z, gt=0, allow_inf_nan=False)

    @property
    def M_inv_ns(self) -> float:
        """Characteristic time 1/M in ns."""
        return 1.0 / self.M

    @property
    def a(self) -> float:
        """Half the dissipation factor, lambda/2."""
        return 0.5 * self.lam

    @property
    def stretch(self) -> float:
        """The recurring factor 1 + lambda^2/4."""
        return 1.0 + 0.25 * self.lam * self.lam


class SolverConfig(BaseModel):
    """Numerical settings shared by both solver routes.

    Attributes:
        theta_min: Regularised lower area cutoff in rad.
        theta_max: Upper area bound in rad. None picks 6*pi for lambda > 0 and
            2*pi - soliton_gap for lambda = 0.
        soliton_gap: Distance kept from the singular endpoint 2*pi when lambda = 0.
        n_grid: Number of output samples on the uniform tau grid.
        abs_tol: Absolute quadrature tolerance.
        rel_tol: Relative quadrature tolerance.
        anchor: Time and phase registration convention.
        node_step: Dimensionless time step between quadrature-route nodes.
        drift_tol: Largest allowed relative drift of the ODE state from the first integral.
        max_nodes: Hard cap on quadrature-route nodes.
    """

    model_config = ConfigDict(frozen=True)

    theta_min: float = Field(default=DEFAULT_THETA_MIN, gt=0, lt=math.pi)
    theta_max: Annotated[float, Field(gt=math.pi, allow_inf_nan=False)] | None = None
    soliton_gap: float = Field(default=DEFAULT_SOLITON_GAP, gt=0, lt=1)
    n_grid: int = Field(default=2001, ge=3)
    abs_tol: float = Field(default=1e-10, gt=0, lt=1)
    rel_tol: float = Field(default=1e-8, gt=0, lt=1)
    anchor: Anchor = Anchor.PI
    node_step: float = Field(default=0.02, gt=0, le=0.5)
    drift_tol: float = Field(default=1e-5, gt=0, lt=1)
    max_nodes: int = Field(default=200_000, ge=10)

    @model_validator(mode="after")
    def _check_bounds(self) -> "SolverConfig":
        if self.theta_max is not None and self.theta_max <= self.theta_min:
            raise ValueError("theta_max must exceed theta_min")
        return self

    def resolved_theta_max(self, lam: float) -> float:
        """Upper area bound actually used for a given lambda."""
        if self.theta_max is not None:
            return self.theta_max
        if lam > 0:
            return LOSSY_THETA_MAX
        return 2.0 * math.pi - self.soliton_gap


def _frozen(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Aligned samples of one pulse solution.

    Arrays are read-only copies. ``envelope`` is exactly ``theta_dot / mu``.
    """

    tau: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    envelope: np.ndarray
    phi: np.ndarray
    params: ModelParams
    config: SolverConfig
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        """Freeze arrays and validate invariants."""
        for name in ("tau", "theta", "theta_dot", "envelope", "phi"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

        n = self.tau.size
        if n < 2 or self.tau.ndim != 1:
            raise ParameterError("trajectory needs at least two samples")
        for name in ("theta", "theta_dot", "envelope", "phi"):
            array = getattr(self, name)
            if array.shape != self.tau.shape:
                raise ParameterError(f"{name} has {array.size} samples, tau has {n}")
            if not np.all(np.isfinite(array)):
                raise ParameterError(f"{name} contains non-finite values")
        if not np.all(np.isfinite(self.tau)) or np.any(np.diff(self.tau) <= 0):
            raise ParameterError("tau must be finite and strictly increasing")
        if np.any(np.diff(self.theta) <= 0):
            raise ParameterError("theta must be strictly increasing")
        if np.any(self.theta_dot < 0):
            raise ParameterError("theta_dot must be non-negative")
        if not np.array_equal(self.envelope, self.theta_dot / self.params.mu):
            raise ParameterError("envelope must equal theta_dot / mu")
        if self.params.lam > 0:
            slack = 1e-12 * max(1.0, float(np.max(np.abs(self.phi))))
            if np.any(np.diff(self.phi) < -slack):
                raise ParameterError("phi must be non-decreasing when lambda > 0")
        elif np.any(self.phi != self.phi[0]):
            raise ParameterError("phi must be constant when lambda = 0")

    def __len__(self) -> int:
        return int(self.tau.size)

    @property
    def lam(self) -> float:
        """Dissipation scale factor of this trajectory."""
        return self.params.lam

    @property
    def tau_range(self) -> tuple[float, float]:
        """First and last sample time in ns."""
        return float(self.tau[0]), float(self.tau[-1])

    def columns(self) -> np.ndarray:
        """Stack (tau, theta, theta_dot, envelope, phi) as an (n, 5) array."""
        return np.column_stack((self.tau, self.theta, self.theta_dot, self.envelope, self.phi))


def make_params(M_inv_ns: float, lam: float) -> ModelParams:
    """Build parameters from a characteristic time and a dissipation factor.

    Args:
        M_inv_ns: Characteristic time 1/M in ns.
        lam: Dimensionless dissipation scale factor.

    Returns:
        ModelParams with M = 1/M_inv_ns and mu = 1.

    Raises:
        ParameterError: If M_inv_ns is not a finite positive number.
        pydantic.ValidationError: If lam is negative or not finite.
    """
    if not math.isfinite(M_inv_ns) or M_inv_ns <= 0:
        raise ParameterError(f"M_inv_ns must be finite and positive, got {M_inv_ns!r}")
    return ModelParams(M=1.0 / M_inv_ns, lam=lam)


def peak_coupling_freq(params: ModelParams) -> float:
    """Peak Rabi frequency of the lossless soliton, 2M/2pi, in GHz.

    This matches the peak coupling only for lambda = 0; dissipative pulses
    peak lower.
    """
    return 2.0 * params.M / (2.0 * math.pi)


def to_dimensionless_time(tau_ns: Any, params: ModelParams) -> Any:
    """Convert local time in ns to s = M*tau."""
    return np.asarray(tau_ns, dtype=float) * params.M


def to_lab_time(s: Any, params: ModelParams) -> Any:
    """Convert s = M*tau back to ns."""
    return np.asarray(s, dtype=float) / params.M


def polarization(theta: Any, params: ModelParams) -> Any:
    """Closed-form medium polarization for Gamma = lambda*theta.

    Returns mu * (1 - exp(-lambda*theta) - i sin(theta) exp(-lambda*theta/2)).
    Its imaginary part drives the envelope, its real part the phase.
    """
    theta = np.asarray(theta, dtype=float)
    lam = params.lam
    value = params.mu * (-np.expm1(-lam * theta) - 1j * np.sin(theta) * np.exp(-0.5 * lam * theta))
    return complex(value) if value.ndim == 0 else value
