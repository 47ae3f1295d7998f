"""Exception types shared across the package."""


class CovrankError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CovrankError, ValueError):
    """An input, configuration, or precondition check failed."""


class NumericalError(CovrankError, RuntimeError):
    """A numerical routine failed to converge within its budget.

    Carries the best available estimate so callers can decide whether the
    partial result is still usable.
    """

    def __init__(self, message, *, best_estimate=None, achieved_rel_tol=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_rel_tol = achieved_rel_tol
