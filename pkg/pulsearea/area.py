"""The area bracket B(theta; lambda) and the quantities derived from it.

B(theta; lambda) = 2 - exp(-lambda*theta/2) * (2 cos(theta) + lambda sin(theta))

is the radicand of the first integral theta_dot = M sqrt(B / (1 + lambda^2/4)).
All functions here are vectorised over theta and work in dimensionless time
s = M*tau unless they take ModelParams.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.polynomial import polynomial as P

from .exceptions import DomainError, RadicandError
from .model import ModelParams

logger = logging.getLogger(__name__)

SERIES_CROSSOVER = 0.05
SERIES_TERMS = 16
RADICAND_FLOOR = -1e-12
TWO_PI = 2.0 * math.pi


@dataclass
class RadicandCounter:
    """Counts radicands clamped from roundoff negatives to zero."""

    clamped: int = 0

    def add(self, count: int) -> None:
        if count:
            self.clamped += count
            logger.debug(f"Clamped {count} negative radicands ({self.clamped} total)")


def _series_coefficients(lam: float) -> np.ndarray:
    """Power-series coefficients of B in theta, lowest order first.

    B = 2 (1 + a^2) * sum_{n>=1} Im((i - a)^n) theta^(n+1) / (n+1)!
    """
    a = 0.5 * lam
    z = complex(-a, 1.0)
    coeffs = np.zeros(SERIES_TERMS + 2)
    power = 1.0 + 0.0j
    factorial = 1.0
    for n in range(1, SERIES_TERMS + 1):
        power *= z
        factorial *= n + 1
        coeffs[n + 1] = 2.0 * (1.0 + a * a) * power.imag / factorial
    return coeffs


def _series_limit(lam: float) -> float:
    return SERIES_CROSSOVER / max(1.0, math.hypot(0.5 * lam, 1.0))


def _as_array(theta: Any) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(np.isnan(theta)):
        raise DomainError("theta must be non-negative")
    return theta


def _like_input(theta: Any, result: np.ndarray) -> Any:
    return float(result) if np.ndim(theta) == 0 else result


def area_bracket(theta: Any, lam: float) -> Any:
    """Evaluate B(theta; lambda) without cancellation.

    Below a small crossover the Taylor series is used; above it the form
    4 e^-x sin^2(theta/2) - 2 expm1(-x) - lambda e^-x sin(theta), x = lambda*theta/2,
    which is exactly 4 sin^2(theta/2) at lambda = 0.

    Args:
        theta: Area in rad, scalar or array, non-negative.
        lam: Dissipation scale factor.

    Returns:
        B with the same shape as theta.

    Raises:
        DomainError: If any theta is negative.
    """
    theta = _as_array(theta)
    x = 0.5 * lam * theta
    decay = np.exp(-x)
    direct = 4.0 * decay * np.sin(0.5 * theta) ** 2 - 2.0 * np.expm1(-x) - lam * decay * np.sin(theta)
    small = theta < _series_limit(lam)
    if np.any(small):
        series = P.polyval(theta, _series_coefficients(lam))
        direct = np.where(small, series, direct)
    return _like_input(theta, direct)


def rate(theta: Any, lam: float, counter: RadicandCounter | None = None) -> Any:
    """Dimensionless area rate d(theta)/ds = sqrt(B / (1 + lambda^2/4)).

    Raises:
        RadicandError: If B is negative beyond roundoff.
    """
    theta = _as_array(theta)
    radicand = np.asarray(area_bracket(theta, lam), dtype=float) / (1.0 + 0.25 * lam * lam)
    negative = radicand < 0
    if np.any(negative):
        worst = float(np.min(radicand))
        if worst < RADICAND_FLOOR:
            raise RadicandError("area bracket is negative", lam=lam, achieved=worst)
        radicand = np.where(negative, 0.0, radicand)
        if counter is not None:
            counter.add(int(np.count_nonzero(negative)))
    return _like_input(theta, np.sqrt(radicand))


def theta_dot(theta: Any, params: ModelParams, counter: RadicandCounter | None = None) -> Any:
    """Area rate in rad/ns, M * sqrt(B / (1 + lambda^2/4)).

    At lambda = 0 this is 2M sin(theta/2) on [0, 2*pi].
    """
    return params.M * rate(theta, params.lam, counter)


def phase_density(theta: Any, lam: float) -> Any:
    """d(phi)/d(theta) = (1 + lambda^2/4)(1 - exp(-lambda*theta)) / B.

    Equivalent to (1 + lambda^2/4) sinh(x) / (e^x - cos(theta) - (lambda/2) sin(theta)).
    Identically zero for lambda = 0 and tends to (1 + lambda^2/4)/2 for large theta.
    """
    theta = _as_array(theta)
    if lam == 0:
        return _like_input(theta, np.zeros_like(theta))
    bracket = np.asarray(area_bracket(theta, lam), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        density = (1.0 + 0.25 * lam * lam) * -np.expm1(-lam * theta) / bracket
    return _like_input(theta, density)


def tau_log_term(theta: Any, lam: float) -> Any:
    """Analytic primitive of the singular part of 1/rate.

    ln(theta) for lambda > 0; ln(theta) - ln(2*pi - theta) for lambda = 0, where
    the rate also vanishes at 2*pi.
    """
    theta = np.asarray(theta, dtype=float)
    if lam == 0:
        return np.log(theta) - np.log(TWO_PI - theta)
    return np.log(theta)


def tau_integrand(theta: Any, lam: float, counter: RadicandCounter | None = None) -> Any:
    """Regularised time integrand 1/rate - d(tau_log_term)/d(theta); smooth on (0, 2*pi]."""
    theta = np.asarray(theta, dtype=float)
    value = 1.0 / rate(theta, lam, counter) - 1.0 / theta
    if lam == 0:
        value = value - 1.0 / (TWO_PI - theta)
    return value


def phi_log_term(theta: Any, lam: float) -> Any:
    """Analytic primitive lambda * ln(theta) of the singular part of the phase density."""
    return lam * np.log(np.asarray(theta, dtype=float))


def phi_integrand(theta: Any, lam: float) -> Any:
    """Regularised phase integrand phase_density - lambda/theta."""
    theta = np.asarray(theta, dtype=float)
    return phase_density(theta, lam) - lam / theta


def inverse_rate(theta: Any, lam: float, counter: RadicandCounter | None = None) -> Any:
    """ds/d(theta) = 1/rate, the unregularised time integrand."""
    return 1.0 / rate(theta, lam, counter)
