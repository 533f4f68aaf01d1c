"""Exception hierarchy.

Validation problems map to CLI exit code 1, numerical failures to exit code 2.
"""


class QLinPhotonError(Exception):
    """Base class for all package errors."""


class ValidationError(QLinPhotonError, ValueError):
    """Malformed input: wrong shapes, violated physical constraints, bad pulses."""


class DimensionError(ValidationError):
    pass


class RejectedStateError(ValidationError):
    """A candidate photon-Gaussian state failed the normalization test."""

    def __init__(self, message, value):
        super().__init__(message)
        self.value = value


class AssumptionError(ValidationError):
    """A realization violates a standing assumption (Hurwitz, minimal, D = 1)."""


class MinimalityError(AssumptionError):
    pass


class NumericalError(QLinPhotonError, ArithmeticError):
    """A numerical procedure failed or lost accuracy."""


class PoleError(NumericalError):
    def __init__(self, s):
        super().__init__(f"transfer function evaluated at a pole: s = {s!r}")
        self.s = s


class PreconditionError(NumericalError):
    """Operation requires e.g. an asymptotically stable system."""


class AccuracyError(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """Output of a transfer violates a property guaranteed by theory."""


class ComplexityError(NumericalError):
    pass


class AccuracyWarning(RuntimeWarning):
    pass


def exit_code(exc: BaseException) -> int:
    """CLI exit status: 1 for validation errors, 2 for numerical failures."""
    if isinstance(exc, ValidationError):
        return 1
    if isinstance(exc, NumericalError):
        return 2
    return 1
