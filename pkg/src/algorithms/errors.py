# algorithms/errors.py


class DomainError(ValueError):
    """Argument outside the domain of a special function or parameter set."""


class RegionError(ValueError):
    """Point violates the ordering/support precondition of an operation."""


class ProbabilityRangeError(ArithmeticError):
    """A computed probability left [0, 1] by more than the clamping slack."""

    def __init__(self, value, message=None):
        self.value = value
        super().__init__(message or f"probability {value!r} outside [0, 1]")


class QuadratureError(RuntimeError):
    def __init__(self, message, estimate, error_bound):
        self.estimate = estimate
        self.error_bound = error_bound
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")


class StructuralCheckError(AssertionError):
    def __init__(self, trial, message):
        self.trial = trial
        super().__init__(f"trial {trial}: {message}")
