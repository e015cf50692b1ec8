"""Exception hierarchy shared by the numerical modules and the runner."""


class GelfandError(Exception):
    """Base class for package errors."""


class ConfigError(GelfandError, ValueError):
    """Invalid experiment configuration or profile specification."""


class NumericalError(GelfandError, ArithmeticError):
    """A numerical procedure could not deliver its contract."""


class StepUnderflow(NumericalError):
    """Adaptive step size collapsed below ``1e-14 * r``."""


class InsufficientRange(NumericalError):
    """The solution was not integrated far enough for the requested analysis."""


class DomainError(NumericalError):
    """Quantity requested outside the regime where it is defined."""


class BracketFailure(NumericalError):
    """Shooting bracket does not straddle the eigenvalue."""


class BracketError(NumericalError):
    """Threshold bisection bracket is not (stable, unstable)."""


class NonMonotoneWitness(NumericalError):
    """A stable verdict was found above an unstable one."""


class SupportError(GelfandError, ValueError):
    """Test function support extends past the integrated range."""


class RangeMismatch(GelfandError, ValueError):
    """Solutions are incompatible for comparison."""


class DimensionError(GelfandError, ValueError):
    """Operation undefined for the requested dimension."""


class TangencyWarning(UserWarning):
    """A solution touches zero without changing sign."""


class PartialFailure(GelfandError):
    """Some tasks or sweep cells failed; the others completed and were written."""

    def __init__(self, message: str, failed: list):
        super().__init__(message)
        self.failed = failed
