"""Exception hierarchy shared by every module."""


class ScaleconError(Exception):
    """Base class for all errors raised by this package."""


class MalformedInputError(ScaleconError, ValueError):
    """A field is non-finite, non-positive or otherwise unparseable."""


class AssumptionViolation(ScaleconError, ValueError):
    """Parameters are well formed but break a model assumption."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class DomainError(ScaleconError, ValueError):
    """An argument lies outside the domain of a function."""


class DivergentMomentError(DomainError):
    """The scaled-technology moment is infinite (theta*(mu - nu) <= 1)."""


class InfeasibleEntryCostError(ScaleconError, ValueError):
    """The entry cost exceeds its upper bound, so the cutoff would fall below 1."""

    def __init__(self, kappa, kappa_max):
        self.kappa = kappa
        self.kappa_max = kappa_max
        super().__init__(
            f"entry cost kappa={kappa!r} exceeds kappa_max={kappa_max!r}; "
            "threshold technology would fall below the minimum draw"
        )


class SolverError(ScaleconError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual_norm=None, residuals=None):
        self.residual_norm = residual_norm
        self.residuals = residuals
        if residual_norm is not None:
            message = f"{message} (final residual norm {residual_norm:.3e})"
        super().__init__(message)


class HorizonTooShortError(SolverError):
    """The transition path has not reached the terminal steady state."""


class CalibrationError(ScaleconError, ValueError):
    """A calibration target cannot be met."""


class SeriesError(ScaleconError, ValueError):
    """An annual input series failed to parse or validate."""


class ScenarioError(ScaleconError, ValueError):
    """A year of a scenario has no admissible steady state."""

    def __init__(self, year, reason):
        self.year = year
        self.reason = reason
        super().__init__(f"year {year}: {reason}")
