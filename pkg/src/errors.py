# src/errors.py
"""
Exception hierarchy.

Usage errors (bad parameters, incompatible pairings) derive from ValueError and map to
CLI exit code 1; numerical failures derive from NumericalError and map to exit code 2.
"""


class SuperresError(Exception):
    """Base class for every error raised by the toolkit."""


# -------------------------------------------------------------------
# Usage / domain errors
# -------------------------------------------------------------------

class ValidityDomainError(SuperresError, ValueError):
    """Parameter outside the domain where the model is defined."""


class UnsupportedOrderError(ValidityDomainError):
    """Hermite polynomial order above the supported maximum."""


class IncompatibleRepresentationError(SuperresError, ValueError):
    """POVM space cannot be evaluated in the requested representation."""


class InvalidPovmError(SuperresError, ValueError):
    """Effects not PSD, not complete, or labels not unique."""


class SingularityError(SuperresError, ArithmeticError):
    """Quantity evaluated at a singular point (e.g. eps = 0 for the separation SLD)."""


# -------------------------------------------------------------------
# Numerical failures
# -------------------------------------------------------------------

class NumericalError(SuperresError, ArithmeticError):
    """Base for failures of a numerical routine."""


class QuadratureError(NumericalError):
    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class ConvergenceError(NumericalError):
    """Search or extrapolation did not converge."""


class NoRootError(NumericalError):
    """Bracketed root search found no sign change."""


class NegativeProbabilityError(NumericalError):
    """Born-rule probability below the negativity tolerance."""


class MalformedModelError(NumericalError):
    """Observed outcome has zero probability under every hypothesis."""


USAGE_ERRORS = (ValidityDomainError, IncompatibleRepresentationError, InvalidPovmError, SingularityError)
