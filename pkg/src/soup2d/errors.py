"""Exception types shared across the package."""


class Soup2dError(Exception):
    """Base class for package errors."""


class DomainError(Soup2dError, ValueError):
    """Invalid argument domain (bad set inclusions, x=0 where forbidden, ...)."""


class AccuracyError(Soup2dError, ArithmeticError):
    """A requested tolerance could not be certified.

    Carries the achieved bound so callers (and the CLI error object)
    can report how far off the computation was.
    """

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class BudgetError(Soup2dError, RuntimeError):
    """A sampling work budget was exhausted (e.g. rejection rate too high)."""

    def __init__(self, message, acceptance_estimate=None):
        super().__init__(message)
        self.acceptance_estimate = acceptance_estimate


class NumericError(Soup2dError, ArithmeticError):
    """Unexpected numerical failure (singular factorization, indefinite covariance)."""
