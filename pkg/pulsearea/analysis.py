"""Checks of computed trajectories against closed forms and limiting behaviour."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .area import theta_dot
from .exceptions import AnalysisError, InsufficientRangeError, ParameterError, SolverError
from .model import Method, ModelParams, SolverConfig, Trajectory, polarization, to_dimensionless_time, to_lab_time
from .reports import (
    AsymptoteFit,
    AuditReport,
    CheckResult,
    ExtremumRecord,
    GammaSample,
    LargeLambdaLimits,
    RouteComparison,
)
from .solver import Route, build_route, invert_theta, time_of_theta

logger = logging.getLogger(__name__)

EXTREMUM_SPACING_NS = 1e-4
NOISE_ULPS = 64
TAIL_FRACTION = 0.2
SOLITON_WINDOW = 4.0
SOLITON_SAMPLES = 801
GAMMA_SAMPLES = 11

SOLITON_TOL = 1e-6
SOLITON_PEAK_TOL = 1e-5
EXTREMUM_TOL = 1e-3
ROUTE_THETA_TOL = 1e-6
ROUTE_PHI_TOL = 1e-5
ROUTE_MIN_LAMBDA = 1e-6
DERIVATIVE_TOL = 1e-4
ENVELOPE_EQUATION_TOL = 1e-3
ASYMPTOTE_TOL = 1e-3


def soliton_oracle(tau: Any, params: ModelParams) -> tuple[Any, Any, Any]:
    """Closed-form lossless pulse: theta = 4 arctan(e^(M tau)), envelope = (2M/mu) sech(M tau), phi = 0.

    Args:
        tau: Times in ns, scalar or array.
        params: Parameters with lambda = 0.

    Returns:
        Tuple of (theta, envelope, phi) shaped like tau.

    Raises:
        ParameterError: If lambda is not zero.
    """
    if params.lam != 0:
        raise ParameterError(f"soliton oracle needs lambda = 0, got {params.lam:g}")
    x = to_dimensionless_time(tau, params)
    tail = np.exp(-np.abs(x))
    theta = math.pi + np.sign(x) * (math.pi - 4.0 * np.arctan(tail))
    envelope = (2.0 * params.M / params.mu) * 2.0 * tail / (1.0 + tail * tail)
    phi = np.zeros_like(x)
    if x.ndim == 0:
        return float(theta), float(envelope), float(phi)
    return theta, envelope, phi


def soliton_deviation(trajectory: Trajectory, tau_lo: float | None = None, tau_hi: float | None = None) -> float:
    """Largest |theta - 4 arctan(e^(M tau))| over the samples in [tau_lo, tau_hi].

    The window defaults to +-4/M. For lambda > 0 this measures how long the
    pulse follows the lossless soliton.
    """
    window = float(to_lab_time(SOLITON_WINDOW, trajectory.params))
    lo = -window if tau_lo is None else tau_lo
    hi = window if tau_hi is None else tau_hi
    inside = (trajectory.tau >= lo) & (trajectory.tau <= hi)
    if not np.any(inside):
        raise AnalysisError(f"no samples in [{lo:g}, {hi:g}] ns")
    reference, _, _ = soliton_oracle(trajectory.tau[inside], trajectory.params.model_copy(update={"lam": 0.0}))
    return float(np.max(np.abs(trajectory.theta[inside] - reference)))


def _refine_extremum(trajectory: Trajectory, t_lo: float, t_hi: float, kind: str) -> ExtremumRecord:
    params = trajectory.params
    n = max(3, math.ceil((t_hi - t_lo) / EXTREMUM_SPACING_NS) + 1)
    fine = np.linspace(t_lo, t_hi, n)
    step = fine[1] - fine[0]
    envelope = np.asarray(theta_dot(invert_theta(trajectory, fine), params)) / params.mu
    j = int(np.argmax(envelope) if kind == "max" else np.argmin(envelope))
    j = min(max(j, 1), n - 2)

    left, centre, right = envelope[j - 1], envelope[j], envelope[j + 1]
    curvature = left - 2.0 * centre + right
    offset = 0.0 if curvature == 0 else float(np.clip(0.5 * (left - right) / curvature, -1.0, 1.0))
    tau_star = float(fine[j] + offset * step)
    theta_star = float(invert_theta(trajectory, tau_star))
    return ExtremumRecord(
        tau=tau_star,
        theta=theta_star,
        envelope=float(theta_dot(theta_star, params)) / params.mu,
        kind=kind,
        residual=abs(theta_star - math.pi * round(theta_star / math.pi)),
    )


def find_envelope_extrema(trajectory: Trajectory) -> list[ExtremumRecord]:
    """Locate interior local extrema of the envelope.

    Sign changes of the discrete derivative are bracketed between neighbouring
    samples, resampled at 1e-4 ns and refined by a three-point parabolic fit.
    Differences at roundoff level are ignored. Every area n*pi strictly inside
    the sampled range is an extremum of the envelope equation; those the scan
    misses on a coarse grid are searched for between (n - 1/2)*pi and
    (n + 1/2)*pi.

    Returns:
        Extrema in time order, possibly empty.
    """
    envelope = trajectory.envelope
    if envelope.size < 3:
        return []
    diff = np.diff(envelope)
    noise = NOISE_ULPS * np.finfo(float).eps * float(np.max(np.abs(envelope)))
    signs = np.sign(np.where(np.abs(diff) <= noise, 0.0, diff))

    tau = trajectory.tau
    extrema: list[ExtremumRecord] = []
    last_sign = 0.0
    last_index = 0
    for i, sign in enumerate(signs):
        if sign == 0:
            continue
        if last_sign and sign != last_sign:
            kind = "max" if last_sign > 0 else "min"
            extrema.append(_refine_extremum(trajectory, float(tau[last_index]), float(tau[i + 1]), kind))
        last_sign, last_index = sign, i

    found = {round(e.theta / math.pi) for e in extrema}
    theta = trajectory.theta
    for n in range(1, int(theta[-1] // math.pi) + 1):
        if n in found or not theta[0] < n * math.pi < theta[-1]:
            continue
        bounds = np.clip([(n - 0.5) * math.pi, (n + 0.5) * math.pi], theta[0], theta[-1])
        t_lo, t_hi = (float(t) for t in time_of_theta(trajectory, bounds))
        kind = "max" if n % 2 else "min"
        extrema.append(_refine_extremum(trajectory, t_lo, t_hi, kind))
        logger.debug(f"Seeded envelope {kind} at theta={n}*pi for lambda={trajectory.lam:g}")
    extrema.sort(key=lambda e: e.tau)

    logger.debug(f"Found {len(extrema)} envelope extrema for lambda={trajectory.lam:g}")
    return extrema


def large_lambda_limits(params: ModelParams) -> LargeLambdaLimits:
    """Exact plateau envelope and phase slope with their lambda >> 1 forms.

    Exact: M sqrt(2/(1 + lambda^2/4))/mu and M sqrt((1 + lambda^2/4)/2).
    Approximate: sqrt(8) M/(lambda mu) and M lambda/sqrt(8).

    Raises:
        ParameterError: If lambda is zero.
    """
    if params.lam <= 0:
        raise ParameterError("tail limits need lambda > 0")
    M, mu, lam, stretch = params.M, params.mu, params.lam, params.stretch
    return LargeLambdaLimits(
        plateau_exact=M * math.sqrt(2.0 / stretch) / mu,
        plateau_approx=math.sqrt(8.0) * M / (lam * mu),
        phase_slope_exact=M * math.sqrt(stretch / 2.0),
        phase_slope_approx=M * lam / math.sqrt(8.0),
    )


def measure_asymptotes(trajectory: Trajectory) -> AsymptoteFit:
    """Fit the plateau envelope and phase slope on the last 20% of the time range.

    Raises:
        AnalysisError: If lambda is zero.
        InsufficientRangeError: If the trajectory stops short of theta = 4*pi.
    """
    if trajectory.lam <= 0:
        raise AnalysisError("asymptotes exist only for lambda > 0")
    if trajectory.theta[-1] < 4.0 * math.pi * (1 - 1e-12):
        raise InsufficientRangeError(f"trajectory ends at theta={trajectory.theta[-1]:.4g}, needs 4*pi")
    tau = trajectory.tau
    tail = tau >= tau[-1] - TAIL_FRACTION * (tau[-1] - tau[0])
    if np.count_nonzero(tail) < 3:
        raise InsufficientRangeError("too few samples in the fitted tail")

    plateau = float(np.mean(trajectory.envelope[tail]))
    slope = float(np.polyfit(tau[tail], trajectory.phi[tail], 1)[0])
    limits = large_lambda_limits(trajectory.params)
    return AsymptoteFit(
        plateau_envelope=plateau,
        plateau_exact=limits.plateau_exact,
        plateau_rel_err=abs(plateau / limits.plateau_exact - 1.0),
        phase_slope=slope,
        phase_slope_exact=limits.phase_slope_exact,
        phase_slope_rel_err=abs(slope / limits.phase_slope_exact - 1.0),
        final_area_excess=float(trajectory.theta[-1] - 2.0 * math.pi),
        plateau_large_lambda=limits.plateau_approx,
        phase_slope_large_lambda=limits.phase_slope_approx,
    )


@dataclass(frozen=True)
class GammaAudit:
    """Decoherence factor ratio Gamma/(lambda*theta) along a trajectory."""

    tau: np.ndarray
    theta: np.ndarray
    ratio: np.ndarray

    def samples(self, count: int = GAMMA_SAMPLES) -> list[GammaSample]:
        """Pick up to count evenly spaced samples for reporting."""
        if self.ratio.size == 0:
            return []
        index = np.unique(np.linspace(0, self.ratio.size - 1, min(count, self.ratio.size)).round().astype(int))
        return [GammaSample(tau=float(self.tau[i]), theta=float(self.theta[i]), ratio=float(self.ratio[i])) for i in index]


def gamma_audit(trajectory: Trajectory, spectral_slope: float | None = None, phi: Any = None) -> GammaAudit:
    """Accumulate Gamma = integral of slope * Omega * sin^2(phi) dtau and compare with lambda*theta.

    With Omega dtau = d(theta) the integral runs over theta; the area before the
    first sample is credited with the first sample's weight. The first sample
    itself is dropped from the ratio. No claim is made that the ratio is 1.

    Args:
        trajectory: Trajectory with lambda > 0.
        spectral_slope: Slope of the linear bath response; defaults to 2*lambda.
        phi: Optional phase samples replacing trajectory.phi.

    Raises:
        AnalysisError: If lambda is zero.
    """
    lam = trajectory.lam
    if lam <= 0:
        raise AnalysisError("gamma audit needs lambda > 0")
    slope = 2.0 * lam if spectral_slope is None else spectral_slope
    theta = trajectory.theta
    phase = trajectory.phi if phi is None else np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
    weight = np.sin(phase) ** 2
    gamma = slope * (theta[0] * weight[0] + cumulative_trapezoid(weight, x=theta, initial=0.0))
    return GammaAudit(tau=trajectory.tau[1:], theta=theta[1:], ratio=gamma[1:] / (lam * theta[1:]))


def derivative_residual(trajectory: Trajectory) -> float:
    """Largest relative gap between finite-difference d(theta)/d(tau) and theta_dot at interior samples."""
    slope = np.gradient(trajectory.theta, trajectory.tau)[1:-1]
    expected = trajectory.theta_dot[1:-1]
    return float(np.max(np.abs(slope - expected) / expected))


def envelope_equation_residual(trajectory: Trajectory) -> float:
    """Largest gap between d(envelope)/d(tau) and (M^2/mu) exp(-lambda*theta/2) sin(theta), relative to its peak.

    The drive is taken as -(M/mu)^2 Im(P) from the closed-form polarization.
    """
    params = trajectory.params
    slope = np.gradient(trajectory.envelope, trajectory.tau)[1:-1]
    theta = trajectory.theta[1:-1]
    expected = -((params.M / params.mu) ** 2) * np.imag(polarization(theta, params))
    return float(np.max(np.abs(slope - expected)) / np.max(np.abs(expected)))


def inversion_time(trajectory: Trajectory) -> float:
    """Time in ns at which the area passes pi."""
    return float(time_of_theta(trajectory, math.pi))


def compare_routes(
    params: ModelParams,
    config: SolverConfig,
    quadrature: Route | None = None,
    ivp: Route | None = None,
) -> RouteComparison:
    """Solve by both routes and compare them on a shared uniform grid over their common range."""
    quadrature = quadrature or build_route(params, config, Method.QUADRATURE)
    ivp = ivp or build_route(params, config, Method.IVP)
    lo = max(quadrature.tau_range[0], ivp.tau_range[0])
    hi = min(quadrature.tau_range[1], ivp.tau_range[1])
    if hi <= lo:
        raise AnalysisError("routes share no time range")
    grid = np.linspace(lo, hi, config.n_grid)
    first = quadrature.trajectory(grid)
    second = ivp.trajectory(grid)
    return RouteComparison(
        tau_lo=lo,
        tau_hi=hi,
        n_points=grid.size,
        theta_max_abs_diff=float(np.max(np.abs(first.theta - second.theta))),
        phi_max_abs_diff=float(np.max(np.abs(first.phi - second.phi))),
    )


def _soliton_errors(params: ModelParams, routes: Sequence[Route]) -> tuple[float, float]:
    theta_err = 0.0
    peak_err = 0.0
    peak = 2.0 * params.M / params.mu
    for route in routes:
        lo, hi = route.tau_range
        window = float(to_lab_time(SOLITON_WINDOW, params))
        grid = np.linspace(max(-window, lo), min(window, hi), SOLITON_SAMPLES)
        trajectory = route.trajectory(grid)
        theta_err = max(theta_err, soliton_deviation(trajectory, grid[0], grid[-1]))
        at_zero = route.trajectory(np.array([0.0, min(window, hi)]))
        peak_err = max(peak_err, abs(at_zero.envelope[0] / peak - 1.0))
    return theta_err, peak_err


def _route_check(
    params: ModelParams, config: SolverConfig, quadrature: Route
) -> tuple[Route | None, RouteComparison | None, CheckResult]:
    # Near the saddle at 2*pi the ODE error grows like rel_tol/lambda.
    hard = params.lam == 0 or params.lam >= ROUTE_MIN_LAMBDA
    if not hard:
        logger.warning(f"lambda={params.lam:g} is below {ROUTE_MIN_LAMBDA:g}: route equivalence is a soft check")
    try:
        ivp = build_route(params, config, Method.IVP)
        comparison = compare_routes(params, config, quadrature=quadrature, ivp=ivp)
    except SolverError as exc:
        logger.warning(f"IVP route failed for lambda={params.lam:g}: {exc}")
        return None, None, CheckResult(name="route_equivalence", passed=False, hard=hard, message=str(exc))
    passed = comparison.theta_max_abs_diff <= ROUTE_THETA_TOL and comparison.phi_max_abs_diff <= ROUTE_PHI_TOL
    check = CheckResult(
        name="route_equivalence",
        passed=passed,
        value=comparison.theta_max_abs_diff,
        threshold=ROUTE_THETA_TOL,
        hard=hard,
        message=(
            f"theta diff {comparison.theta_max_abs_diff:.2e} (limit {ROUTE_THETA_TOL:g}), "
            f"phi diff {comparison.phi_max_abs_diff:.2e} (limit {ROUTE_PHI_TOL:g})"
        ),
    )
    return ivp, comparison, check


def build_audit_report(
    params: ModelParams, config: SolverConfig, spectral_slope: float | None = None
) -> AuditReport:
    """Solve by both routes and audit every checked property for one lambda.

    Hard checks are soliton agreement (lambda = 0), extremum placement and
    route equivalence. Route equivalence is soft for 0 < lambda < 1e-6. The
    rest are reported as soft checks.

    Raises:
        SolverError: If the quadrature route fails. IVP failures become a
            failed route_equivalence check instead.
    """
    lam = params.lam
    quadrature = build_route(params, config, Method.QUADRATURE)
    trajectory = quadrature.trajectory()
    ivp, comparison, route_check = _route_check(params, config, quadrature)
    checks = [route_check]

    soliton_err = peak_err = None
    if lam == 0:
        routes = [quadrature] if ivp is None else [quadrature, ivp]
        soliton_err, peak_err = _soliton_errors(params, routes)
        checks.append(
            CheckResult(
                name="soliton",
                passed=soliton_err <= SOLITON_TOL and peak_err <= SOLITON_PEAK_TOL,
                value=soliton_err,
                threshold=SOLITON_TOL,
                message=f"peak envelope relative error {peak_err:.2e} (limit {SOLITON_PEAK_TOL:g})",
            )
        )

    extrema = find_envelope_extrema(trajectory)
    worst = max((e.residual for e in extrema), default=0.0)
    checks.append(
        CheckResult(name="extrema_placement", passed=worst <= EXTREMUM_TOL, value=worst, threshold=EXTREMUM_TOL)
    )

    residual = derivative_residual(trajectory)
    checks.append(
        CheckResult(
            name="derivative_consistency", passed=residual <= DERIVATIVE_TOL, value=residual,
            threshold=DERIVATIVE_TOL, hard=False,
        )
    )
    envelope_residual = envelope_equation_residual(trajectory)
    checks.append(
        CheckResult(
            name="envelope_equation", passed=envelope_residual <= ENVELOPE_EQUATION_TOL, value=envelope_residual,
            threshold=ENVELOPE_EQUATION_TOL, hard=False,
        )
    )

    excess = float(trajectory.theta[-1] - 2.0 * math.pi)
    asymptotes = None
    gamma: list[GammaSample] = []
    if lam > 0:
        checks.append(CheckResult(name="area_excess", passed=excess > 0, value=excess, threshold=0.0, hard=False))
        gamma = gamma_audit(trajectory, spectral_slope).samples()
        try:
            asymptotes = measure_asymptotes(trajectory)
        except InsufficientRangeError as exc:
            logger.info(f"Skipping asymptote fit for lambda={lam:g}: {exc}")
        if asymptotes is not None:
            checks.append(
                CheckResult(
                    name="plateau", passed=asymptotes.plateau_rel_err <= ASYMPTOTE_TOL,
                    value=asymptotes.plateau_rel_err, threshold=ASYMPTOTE_TOL, hard=False,
                )
            )
            checks.append(
                CheckResult(
                    name="phase_slope", passed=asymptotes.phase_slope_rel_err <= ASYMPTOTE_TOL,
                    value=asymptotes.phase_slope_rel_err, threshold=ASYMPTOTE_TOL, hard=False,
                )
            )

    report = AuditReport(
        lam=lam,
        M=params.M,
        anchor=config.anchor.value,
        soliton_max_abs_err=soliton_err,
        soliton_peak_rel_err=peak_err,
        asymptotes=asymptotes,
        extrema=extrema,
        final_area_excess=excess,
        gamma_ratio=gamma,
        route_comparison=comparison,
        derivative_residual=residual,
        envelope_equation_residual=envelope_residual,
        peak_envelope=float(np.max(trajectory.envelope)),
        inversion_time=inversion_time(trajectory),
        checks=checks,
    )
    failed = [c.name for c in report.failed_checks]
    logger.info(f"Audit lambda={lam:g}: {len(checks)} checks, failed: {failed or 'none'}")
    return report


def attenuation_check(reports: Sequence[AuditReport]) -> CheckResult:
    """Soft sweep check that the peak envelope does not grow with lambda."""
    ordered = sorted(reports, key=lambda r: r.lam)
    peaks = np.array([r.peak_envelope for r in ordered])
    rises = np.diff(peaks)
    worst = float(np.max(rises)) if rises.size else 0.0
    return CheckResult(
        name="monotone_attenuation",
        passed=worst <= 1e-9 * float(np.max(peaks, initial=1.0)),
        value=max(worst, 0.0),
        threshold=0.0,
        hard=False,
    )
