"""Exception types shared by all modules."""


class HeisenkernelError(Exception):
    """Base class for library errors."""


class DomainError(HeisenkernelError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class RegimeError(HeisenkernelError):
    """A formula was requested outside the regime where it applies."""


class AccuracyError(HeisenkernelError):
    """A requested tolerance could not be met.

    The best available value and its error estimate are attached so callers
    can still inspect them.
    """

    def __init__(self, message, value=None, err_estimate=None):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate
