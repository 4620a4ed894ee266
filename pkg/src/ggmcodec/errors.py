"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the documented domain of an operation."""


class SingularityError(DomainError):
    """Evaluation was requested at a point where the formula is singular."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateRateError(NumericError):
    """The discrete rate is too close to zero to act as a denominator."""


class PmfUnderflowError(NumericError):
    """A probability mass underflowed below the representable floor."""


class InsufficientOverlapError(DomainError):
    """Two rate-distortion curves share no usable quality range."""


class CorruptionError(ValueError):
    """A serialized stream failed validation and cannot be decoded."""


class AccuracyWarning(RuntimeWarning):
    """An iterative routine exhausted its budget before full convergence."""
