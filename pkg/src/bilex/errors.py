"""Exception hierarchy shared by all modules."""


class BilexError(Exception):
    """Base class for every error raised by the package."""


class InvalidCurveError(BilexError, ValueError):
    """Curve data is malformed, degenerate or self-intersecting."""


class OffCurveError(BilexError, ValueError):
    """A point expected to lie on the curve is farther than the tolerance."""


class DomainError(BilexError, ValueError):
    """Argument outside the domain of the map (e.g. not in the upper half-plane)."""


class EngineAccuracyError(BilexError, ArithmeticError):
    """The conformal engine failed to converge or failed its accuracy gate."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class QuadratureError(BilexError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class InversionError(BilexError, ArithmeticError):
    """Newton inversion of the extension did not converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DegenerateStartError(BilexError, ValueError):
    """Monte Carlo start point lies within the absorption layer."""


class UsageError(BilexError, ValueError):
    """Inconsistent arguments (wrong inequality branch, bad grid spec, ...)."""
