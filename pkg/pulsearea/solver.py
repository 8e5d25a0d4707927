"""Trajectory construction.

Two independent routes produce the same Trajectory:

* quadrature: invert the implicit solution tau(theta) and accumulate phi(theta)
  by adaptive Gauss-Kronrod quadrature, with the logarithmic endpoint
  singularities integrated analytically;
* ivp: integrate the pendulum equation theta'' = exp(-lambda*theta/2) sin(theta)
  with an embedded Runge-Kutta pair, starting on the first-integral branch.

Both work in s = M*tau and report theta_dot from the first integral.
"""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from typing import Any

import numpy as np
from scipy.integrate import quad_vec, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .area import (
    TWO_PI,
    RadicandCounter,
    inverse_rate,
    phase_density,
    phi_integrand,
    phi_log_term,
    rate,
    tau_integrand,
    tau_log_term,
    theta_dot,
)
from .exceptions import (
    DomainError,
    FirstIntegralDriftError,
    OutOfRangeError,
    SolverError,
    StepSizeError,
    ToleranceError,
)
from .model import (
    Anchor,
    Method,
    ModelParams,
    SolverConfig,
    Trajectory,
    to_dimensionless_time,
    to_lab_time,
)

logger = logging.getLogger(__name__)

IVP_TOL_SCALE = 1e-5
IVP_RTOL_FLOOR = 1e-13
NEWTON_STEPS = 2
RANGE_SLACK = 1e-12
MERGE_FRACTION = 0.25


def _integrate_panels(
    func: Callable[[np.ndarray], np.ndarray],
    lower: Any,
    upper: Any,
    config: SolverConfig,
    lam: float,
) -> tuple[np.ndarray, float]:
    """Integrate func over many panels [lower_i, upper_i] in one adaptive pass.

    Every panel is mapped to t in [0, 1] so quad_vec refines them together.

    Returns:
        Tuple of (panel integrals, error estimate in the max norm).

    Raises:
        ToleranceError: If the requested tolerance was not reached.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    width = np.atleast_1d(np.asarray(upper, dtype=float)) - lower
    if lower.size == 0:
        return np.zeros(0), 0.0

    def mapped(t: float) -> np.ndarray:
        return width * func(lower + t * width)

    result, error, info = quad_vec(
        mapped,
        0.0,
        1.0,
        epsabs=config.abs_tol,
        epsrel=config.rel_tol,
        norm="max",
        quadrature="gk21",
        full_output=True,
    )
    if not info.success or not np.all(np.isfinite(result)):
        raise ToleranceError(f"quadrature failed: {info.message}", lam=lam, achieved=float(error))
    return np.asarray(result, dtype=float), float(error)


def _check_theta_grid(theta_grid: Any, lam: float, config: SolverConfig) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    theta_max = config.resolved_theta_max(lam)
    if lam == 0 and theta_max >= TWO_PI:
        raise DomainError("theta_max must stay below 2*pi when lambda = 0", lam=lam)
    if theta.ndim != 1 or theta.size == 0:
        raise DomainError("theta grid must be a non-empty 1-D array", lam=lam)
    if not np.all(np.isfinite(theta)) or np.any(np.diff(theta) <= 0):
        raise DomainError("theta grid must be finite and strictly increasing", lam=lam)
    if theta[0] < config.theta_min * (1 - RANGE_SLACK) or theta[-1] > theta_max * (1 + RANGE_SLACK):
        raise DomainError(
            f"theta grid [{theta[0]:g}, {theta[-1]:g}] outside [{config.theta_min:g}, {theta_max:g}]", lam=lam
        )
    return theta


def _anchor_point(config: SolverConfig) -> tuple[float, float]:
    """Area where the anchor is set and the dimensionless time assigned to it."""
    if config.anchor is Anchor.FRONT:
        return config.theta_min, math.log(math.tan(0.25 * config.theta_min))
    return math.pi, 0.0


def _anchored_primitive(
    theta: np.ndarray,
    lam: float,
    config: SolverConfig,
    integrand: Callable[[np.ndarray], np.ndarray],
    log_term: Callable[[Any, float], Any],
    anchor_value: float,
) -> tuple[np.ndarray, float]:
    """Primitive of integrand + d(log_term) on theta, equal to anchor_value at the anchor area."""
    anchor_theta, _ = _anchor_point(config)
    edges = np.union1d(theta, [anchor_theta])
    panels, error = _integrate_panels(integrand, edges[:-1], edges[1:], config, lam)
    cumulative = np.concatenate(([0.0], np.cumsum(panels)))
    at = np.searchsorted(edges, theta)
    anchor = int(np.searchsorted(edges, anchor_theta))
    values = (
        anchor_value
        + (cumulative[at] - cumulative[anchor])
        + (np.asarray(log_term(theta, lam)) - float(log_term(anchor_theta, lam)))
    )
    return values, error


def _dimensionless_time(
    theta: np.ndarray, lam: float, config: SolverConfig, counter: RadicandCounter | None = None
) -> tuple[np.ndarray, float]:
    _, s_anchor = _anchor_point(config)
    return _anchored_primitive(
        theta, lam, config, lambda x: tau_integrand(x, lam, counter), tau_log_term, s_anchor
    )


def _phase(theta: np.ndarray, lam: float, config: SolverConfig) -> tuple[np.ndarray, float]:
    if lam == 0:
        return np.zeros_like(theta), 0.0
    return _anchored_primitive(theta, lam, config, lambda x: phi_integrand(x, lam), phi_log_term, 0.0)


def tau_of_theta(theta_grid: Any, params: ModelParams, config: SolverConfig) -> np.ndarray:
    """Local time in ns at which the pulse has accumulated each area.

    Integrates sqrt(1 + lambda^2/4) / (M sqrt(B)) from the anchor. The 1/theta
    singularity (and 1/(2*pi - theta) when lambda = 0) is integrated analytically.

    Args:
        theta_grid: Strictly increasing areas in [theta_min, theta_max].
        params: Model parameters.
        config: Solver settings; the anchor fixes the time origin.

    Returns:
        Array of times in ns.

    Raises:
        DomainError: If the grid is invalid or lambda = 0 with theta_max >= 2*pi.
        ToleranceError: If quadrature does not converge.
    """
    theta = _check_theta_grid(theta_grid, params.lam, config)
    s, error = _dimensionless_time(theta, params.lam, config)
    logger.debug(f"tau_of_theta lambda={params.lam:g}: {theta.size} points, error estimate {error:.2e}")
    return to_lab_time(s, params)


def phi_of_theta(theta_grid: Any, params: ModelParams, config: SolverConfig) -> np.ndarray:
    """Pulse phase in rad at each area, zero at the anchor.

    Integrates (1 + lambda^2/4)(1 - exp(-lambda*theta)) / B; the lambda/theta
    singularity is integrated analytically. Identically zero for lambda = 0.

    Raises:
        DomainError: As tau_of_theta.
        ToleranceError: If quadrature does not converge.
    """
    theta = _check_theta_grid(theta_grid, params.lam, config)
    phi, error = _phase(theta, params.lam, config)
    logger.debug(f"phi_of_theta lambda={params.lam:g}: {theta.size} points, error estimate {error:.2e}")
    return phi


class Route(ABC):
    """A solved trajectory that can be sampled at any time in its range."""

    method: Method

    def __init__(self, params: ModelParams, config: SolverConfig) -> None:
        self.params = params
        self.config = config
        self.theta_max = config.resolved_theta_max(params.lam)
        self.counter = RadicandCounter()
        self.s_start = 0.0
        self.s_end = 0.0
        self.diagnostics: dict[str, Any] = {"method": self.method.value}

    @property
    def tau_range(self) -> tuple[float, float]:
        """Time span covered by this route, in ns."""
        lo, hi = to_lab_time([self.s_start, self.s_end], self.params)
        return float(lo), float(hi)

    @abstractmethod
    def _sample(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (theta, phi) at dimensionless times s."""

    def _checked_tau_grid(self, tau_grid: Any) -> np.ndarray:
        tau = np.asarray(tau_grid, dtype=float)
        if tau.ndim != 1 or tau.size < 2 or not np.all(np.isfinite(tau)) or np.any(np.diff(tau) <= 0):
            raise DomainError("tau grid must be a finite, strictly increasing array of at least two points")
        lo, hi = self.tau_range
        slack = RANGE_SLACK * max(1.0, hi - lo)
        if tau[0] < lo - slack or tau[-1] > hi + slack:
            raise OutOfRangeError(f"tau grid [{tau[0]:g}, {tau[-1]:g}] outside trajectory range [{lo:g}, {hi:g}]")
        return tau

    def trajectory(self, tau_grid: Any = None) -> Trajectory:
        """Sample the route on tau_grid, or on a uniform grid of n_grid points over its full range."""
        if tau_grid is None:
            s = np.linspace(self.s_start, self.s_end, self.config.n_grid)
            tau = to_lab_time(s, self.params)
        else:
            tau = self._checked_tau_grid(tau_grid)
            s = np.clip(to_dimensionless_time(tau, self.params), self.s_start, self.s_end)
        theta, phi = self._sample(s)
        rates = np.asarray(theta_dot(theta, self.params, self.counter))
        self.diagnostics["clamped_radicands"] = self.counter.clamped
        return Trajectory(
            tau=tau,
            theta=theta,
            theta_dot=rates,
            envelope=rates / self.params.mu,
            phi=phi,
            params=self.params,
            config=self.config,
            diagnostics=dict(self.diagnostics),
        )


class QuadratureRoute(Route):
    """Trajectory from the implicit solution tau(theta), phi(theta).

    Nodes are placed a fixed dimensionless time apart, tau and phi are found at
    the nodes by quadrature, and arbitrary times are inverted with a cubic
    Hermite guess polished by Newton steps on the exact time integral.
    """

    method = Method.QUADRATURE

    def __init__(self, params: ModelParams, config: SolverConfig) -> None:
        super().__init__(params, config)
        lam = params.lam
        self.nodes = self._march_nodes()
        self.s_nodes, s_error = _dimensionless_time(self.nodes, lam, config, self.counter)
        self.phi_nodes, phi_error = _phase(self.nodes, lam, config)
        self.rate_nodes = np.asarray(rate(self.nodes, lam, self.counter))
        if np.any(np.diff(self.s_nodes) <= 0):
            raise SolverError("node times are not strictly increasing", lam=lam, achieved=s_error)
        self._spline = CubicHermiteSpline(self.s_nodes, self.nodes, self.rate_nodes)
        self.s_start = float(self.s_nodes[0])
        self.s_end = float(self.s_nodes[-1])
        self.diagnostics.update(nodes=int(self.nodes.size), tau_error=s_error, phi_error=phi_error)
        logger.debug(
            f"Quadrature route lambda={lam:g}: {self.nodes.size} nodes, "
            f"errors tau={s_error:.2e} phi={phi_error:.2e}"
        )

    def _march_nodes(self) -> np.ndarray:
        lam = self.params.lam
        config = self.config
        _check_theta_grid([config.theta_min, self.theta_max], lam, config)
        nodes = [config.theta_min]
        theta = config.theta_min
        while theta < self.theta_max:
            if len(nodes) >= config.max_nodes:
                raise SolverError(f"more than {config.max_nodes} quadrature nodes needed", lam=lam)
            step = config.node_step * rate(theta, lam, self.counter)
            if step <= 0:
                raise SolverError(f"area rate vanished at theta={theta:g}", lam=lam)
            upcoming = theta + step
            if theta < math.pi < upcoming:
                if upcoming - math.pi < MERGE_FRACTION * step:
                    upcoming = math.pi
                else:
                    nodes.append(math.pi)
            if self.theta_max - upcoming < MERGE_FRACTION * step:
                upcoming = self.theta_max
            theta = upcoming
            nodes.append(theta)
        return np.array(nodes)

    def _node_index(self, theta: np.ndarray) -> np.ndarray:
        index = np.searchsorted(self.nodes, theta, side="right") - 1
        return np.clip(index, 0, self.nodes.size - 2)

    def _sample(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lam = self.params.lam
        lo, hi = self.nodes[0], self.nodes[-1]
        theta = np.clip(self._spline(s), lo, hi)
        for _ in range(NEWTON_STEPS):
            k = self._node_index(theta)
            elapsed, _ = _integrate_panels(
                lambda x: inverse_rate(x, lam, self.counter), self.nodes[k], theta, self.config, lam
            )
            residual = self.s_nodes[k] + elapsed - s
            theta = np.clip(theta - residual * np.asarray(rate(theta, lam, self.counter)), lo, hi)
        if lam == 0:
            return theta, np.zeros_like(theta)
        k = self._node_index(theta)
        gained, _ = _integrate_panels(lambda x: phase_density(x, lam), self.nodes[k], theta, self.config, lam)
        return theta, self.phi_nodes[k] + gained


class IvpRoute(Route):
    """Trajectory from direct integration of the pendulum equation.

    State is (theta, theta', phi) in s = M*tau, started at theta_min on the
    first-integral branch at s = ln tan(theta_min/4).
    """

    method = Method.IVP

    def __init__(self, params: ModelParams, config: SolverConfig) -> None:
        super().__init__(params, config)
        lam = params.lam
        a = 0.5 * lam
        theta_max = self.theta_max
        _check_theta_grid([config.theta_min, theta_max], lam, config)

        def rhs(_s: float, y: np.ndarray) -> list[float]:
            theta, velocity, _ = y
            accel = math.exp(-a * theta) * math.sin(theta)
            dphi = 0.0 if lam == 0 or velocity <= 0 else -math.expm1(-lam * theta) / velocity
            return [velocity, accel, dphi]

        def reached_max(_s: float, y: np.ndarray) -> float:
            return float(y[0] - theta_max)

        def turned_back(_s: float, y: np.ndarray) -> float:
            return float(y[1])

        def crossed_pi(_s: float, y: np.ndarray) -> float:
            return float(y[0] - math.pi)

        reached_max.terminal = True  # type: ignore[attr-defined]
        reached_max.direction = 1  # type: ignore[attr-defined]
        turned_back.terminal = True  # type: ignore[attr-defined]
        turned_back.direction = -1  # type: ignore[attr-defined]
        crossed_pi.direction = 1  # type: ignore[attr-defined]

        self.rtol = max(config.rel_tol * IVP_TOL_SCALE, IVP_RTOL_FLOOR)
        self.atol = config.abs_tol * IVP_TOL_SCALE
        s0 = math.log(math.tan(0.25 * config.theta_min))
        plateau = math.sqrt(2.0 / (1.0 + a * a))
        span = 100.0 + 4.0 * theta_max / plateau
        y0 = [config.theta_min, float(rate(config.theta_min, lam, self.counter)), 0.0]

        sol = solve_ivp(
            rhs,
            (s0, s0 + span),
            y0,
            method="DOP853",
            rtol=self.rtol,
            atol=self.atol,
            dense_output=True,
            events=(reached_max, turned_back, crossed_pi),
        )
        if sol.status == -1:
            raise StepSizeError(f"integration failed: {sol.message}", lam=lam, achieved=self.rtol)
        if sol.t_events[1].size:
            raise FirstIntegralDriftError(
                f"trajectory turned back at s={sol.t_events[1][0]:g}", lam=lam, achieved=self.rtol
            )
        if sol.t_events[0].size == 0 or sol.t_events[2].size == 0:
            raise SolverError(f"trajectory did not reach theta_max={theta_max:g}", lam=lam, achieved=self.rtol)

        self._solution = sol.sol
        if config.anchor is Anchor.PI:
            self._shift = float(sol.t_events[2][0])
            self._phi_shift = float(sol.sol(self._shift)[2])
        else:
            self._shift = 0.0
            self._phi_shift = 0.0
        self.s_start = s0 - self._shift
        self.s_end = float(sol.t_events[0][0]) - self._shift

        drift = self._drift(sol.y[0], sol.y[1])
        self.diagnostics.update(steps=int(sol.t.size), nfev=int(sol.nfev), rtol=self.rtol, drift=drift)
        logger.debug(f"IVP route lambda={lam:g}: {sol.t.size} steps, {sol.nfev} evaluations, drift {drift:.2e}")

    def _drift(self, theta: np.ndarray, velocity: np.ndarray) -> float:
        expected = np.asarray(rate(np.clip(theta, self.config.theta_min, self.theta_max), self.params.lam))
        drift = float(np.max(np.abs(velocity - expected)) / np.max(expected))
        if drift > self.config.drift_tol:
            raise FirstIntegralDriftError("state left the first-integral branch", lam=self.params.lam, achieved=drift)
        return drift

    def _sample(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        state = self._solution(s + self._shift)
        theta = np.clip(state[0], self.config.theta_min, self.theta_max)
        self.diagnostics["drift"] = max(self.diagnostics["drift"], self._drift(theta, state[1]))
        if self.params.lam == 0:
            return theta, np.zeros_like(theta)
        return theta, state[2] - self._phi_shift


def build_route(params: ModelParams, config: SolverConfig, method: Method | str = Method.QUADRATURE) -> Route:
    """Solve once with the chosen method and return a route that can be sampled repeatedly."""
    method = Method(method)
    if method is Method.IVP:
        return IvpRoute(params, config)
    return QuadratureRoute(params, config)


def integrate_ivp(params: ModelParams, config: SolverConfig, tau_grid: Any = None) -> Trajectory:
    """Integrate theta_ddot = M^2 exp(-lambda*theta/2) sin(theta) and sample it.

    Raises:
        StepSizeError: If the step size underflows.
        FirstIntegralDriftError: If the state drifts off the first-integral branch.
        SolverError: If theta_max is not reached.
    """
    return IvpRoute(params, config).trajectory(tau_grid)


def solve_trajectory(
    params: ModelParams,
    config: SolverConfig,
    method: Method | str = Method.QUADRATURE,
    tau_grid: Any = None,
) -> Trajectory:
    """Solve for the pulse trajectory with either route.

    Args:
        params: Model parameters.
        config: Solver settings.
        method: "quadrature" or "ivp".
        tau_grid: Optional strictly increasing times in ns; defaults to n_grid
            uniform samples over the full solved range.

    Returns:
        Trajectory sampled on the requested grid.
    """
    route = build_route(params, config, method)
    trajectory = route.trajectory(tau_grid)
    lo, hi = route.tau_range
    logger.debug(f"Solved lambda={params.lam:g} by {route.method.value}: tau in [{lo:.4g}, {hi:.4g}] ns")
    return trajectory


def monotone_slopes(x: np.ndarray, y: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """Limit Hermite slopes so the cubic stays monotone on increasing data (Fritsch-Carlson)."""
    secant = np.diff(y) / np.diff(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = np.hypot(slopes[:-1] / secant, slopes[1:] / secant)
    scale = np.where(norm > 3.0, 3.0 / norm, 1.0)
    factor = np.ones_like(slopes)
    factor[:-1] = np.minimum(factor[:-1], scale)
    factor[1:] = np.minimum(factor[1:], scale)
    return slopes * factor


def monotone_interpolant(x: np.ndarray, y: np.ndarray, slopes: np.ndarray) -> CubicHermiteSpline:
    """Monotone cubic Hermite interpolant through strictly increasing (x, y)."""
    return CubicHermiteSpline(x, y, monotone_slopes(x, y, np.asarray(slopes, dtype=float)))


def _interpolate_at(x: np.ndarray, y: np.ndarray, slopes: np.ndarray, query: Any, what: str) -> Any:
    q = np.asarray(query, dtype=float)
    slack = RANGE_SLACK * max(1.0, float(x[-1] - x[0]))
    if np.any(np.isnan(q)) or np.any(q < x[0] - slack) or np.any(q > x[-1] + slack):
        raise OutOfRangeError(f"{what} query outside [{x[0]:g}, {x[-1]:g}]")
    q = np.clip(q, x[0], x[-1])
    values = np.asarray(monotone_interpolant(x, y, slopes)(q))
    index = np.clip(np.searchsorted(x, q), 0, x.size - 1)
    values = np.where(x[index] == q, y[index], values)
    return float(values) if values.ndim == 0 else values


def invert_theta(trajectory: Trajectory, tau_query: Any) -> Any:
    """Area at the given times by monotone cubic interpolation.

    Slopes are the trajectory's own theta_dot, limited to keep the interpolant
    monotone. Stored nodes are reproduced exactly.

    Raises:
        OutOfRangeError: If any query lies outside the trajectory's tau range.
    """
    return _interpolate_at(trajectory.tau, trajectory.theta, trajectory.theta_dot, tau_query, "tau")


def time_of_theta(trajectory: Trajectory, theta_query: Any) -> Any:
    """Time at the given areas, the inverse of invert_theta on the same samples.

    Raises:
        OutOfRangeError: If any query lies outside the trajectory's theta range.
    """
    slopes = 1.0 / np.maximum(trajectory.theta_dot, np.finfo(float).tiny)
    return _interpolate_at(trajectory.theta, trajectory.tau, slopes, theta_query, "theta")
