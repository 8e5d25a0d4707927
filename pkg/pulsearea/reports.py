"""Pydantic models for analysis results and audit summaries."""

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ExtremumRecord(BaseModel):
    """A local extremum of the envelope."""

    tau: float
    theta: float
    envelope: float
    kind: Literal["max", "min"]
    residual: float = Field(ge=0, description="|theta - n*pi| for the nearest integer n")


class AsymptoteFit(BaseModel):
    """Plateau envelope and phase slope fitted on the tail of a trajectory."""

    plateau_envelope: float
    plateau_exact: float
    plateau_rel_err: float = Field(ge=0)
    phase_slope: float
    phase_slope_exact: float
    phase_slope_rel_err: float = Field(ge=0)
    final_area_excess: float
    plateau_large_lambda: float
    phase_slope_large_lambda: float


class LargeLambdaLimits(BaseModel):
    """Exact tail limits next to their lambda >> 1 approximations."""

    plateau_exact: float
    plateau_approx: float
    phase_slope_exact: float
    phase_slope_approx: float

    @property
    def plateau_deviation(self) -> float:
        """Relative deviation of the approximate plateau from the exact one."""
        return abs(self.plateau_approx / self.plateau_exact - 1.0)

    @property
    def phase_slope_deviation(self) -> float:
        """Relative deviation of the approximate phase slope from the exact one."""
        return abs(self.phase_slope_approx / self.phase_slope_exact - 1.0)


class RouteComparison(BaseModel):
    """Agreement of the quadrature and ODE routes on their common time range."""

    tau_lo: float
    tau_hi: float
    n_points: int
    theta_max_abs_diff: float = Field(ge=0)
    phi_max_abs_diff: float = Field(ge=0)


class GammaSample(BaseModel):
    """Ratio of the accumulated decoherence factor to lambda*theta at one time."""

    tau: float
    theta: float
    ratio: float


class CheckResult(BaseModel):
    """Outcome of one audited property."""

    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    hard: bool = True
    message: str | None = None


class AuditReport(BaseModel):
    """Residuals of every audited property for one lambda."""

    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda")
    M: float
    anchor: str
    soliton_max_abs_err: float | None = None
    soliton_peak_rel_err: float | None = None
    asymptotes: AsymptoteFit | None = None
    extrema: list[ExtremumRecord] = Field(default_factory=list)
    final_area_excess: float
    gamma_ratio: list[GammaSample] = Field(default_factory=list)
    route_comparison: RouteComparison | None = None
    derivative_residual: float = Field(ge=0)
    envelope_equation_residual: float = Field(ge=0)
    peak_envelope: float = Field(ge=0)
    inversion_time: float
    checks: list[CheckResult] = Field(default_factory=list)

    @field_validator(
        "soliton_max_abs_err",
        "soliton_peak_rel_err",
        "final_area_excess",
        "derivative_residual",
        "envelope_equation_residual",
        "inversion_time",
    )
    @classmethod
    def _finite(cls, value: float | None) -> float | None:
        if value is not None and not math.isfinite(value):
            raise ValueError("residuals must be finite")
        return value

    @property
    def passed(self) -> bool:
        """True if every hard check passed."""
        return all(check.passed for check in self.checks if check.hard)

    @property
    def failed_checks(self) -> list[CheckResult]:
        """Hard checks that did not pass."""
        return [check for check in self.checks if check.hard and not check.passed]


class SweepAudit(BaseModel):
    """Audit reports for a whole lambda sweep plus sweep-level checks."""

    reports: list[AuditReport]
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True if every per-lambda and sweep-level hard check passed."""
        return all(report.passed for report in self.reports) and all(c.passed for c in self.checks if c.hard)

    def failures(self) -> list[str]:
        """Names of failing hard checks, prefixed by lambda where applicable."""
        names = [f"lambda={r.lam:g}: {c.name}" for r in self.reports for c in r.failed_checks]
        names.extend(c.name for c in self.checks if c.hard and not c.passed)
        return names
