"""Error hierarchy for PulseArea."""


class PulseAreaError(Exception):
    """Base class for all PulseArea errors."""


class ParameterError(PulseAreaError, ValueError):
    """Invalid physical or numerical input."""


class ConfigError(PulseAreaError):
    """Invalid run configuration.

    Attributes:
        key: Name of the offending configuration key, if known.
    """

    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key

    def __reduce__(self):
        return (self.__class__, (self.args[0], self.key))


class SolverError(PulseAreaError):
    """A trajectory could not be computed to the requested accuracy.

    Attributes:
        lam: Dissipation scale factor of the failing run, if known.
        achieved: Achieved error estimate or tolerance, if known.
    """

    def __init__(self, message: str, lam: float | None = None, achieved: float | None = None) -> None:
        super().__init__(message)
        self.lam = lam
        self.achieved = achieved

    def __reduce__(self):
        return (self.__class__, (self.args[0], self.lam, self.achieved))

    def __str__(self) -> str:
        message = super().__str__()
        details = []
        if self.lam is not None:
            details.append(f"lambda={self.lam:g}")
        if self.achieved is not None:
            details.append(f"achieved={self.achieved:.3e}")
        return f"{message} ({', '.join(details)})" if details else message


class DomainError(SolverError, ValueError):
    """Input outside the domain where the solution exists."""


class ToleranceError(SolverError):
    """Quadrature did not reach the requested tolerance."""


class StepSizeError(SolverError):
    """ODE integrator step size underflowed."""


class FirstIntegralDriftError(SolverError):
    """ODE trajectory left the first-integral branch."""


class RadicandError(SolverError):
    """Area bracket is negative beyond roundoff."""


class AnalysisError(PulseAreaError):
    """A trajectory cannot support the requested analysis."""


class InsufficientRangeError(AnalysisError):
    """Trajectory does not extend far enough for an asymptotic fit."""


class OutOfRangeError(PulseAreaError, ValueError):
    """Query outside the sampled range of a trajectory."""
