"""Exception types shared across the package."""


class AdmhdError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AdmhdError, ValueError):
    """Inconsistent grid, parameter or configuration input.

    ``violations`` lists every violated constraint when several were found
    at once (config validation reports all of them, not just the first).
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class InvariantViolationError(AdmhdError):
    """A field broke one of its structural invariants (reality, mean-free)."""


class BlowUpError(AdmhdError, FloatingPointError):
    """Time integration produced non-finite values or runaway energy growth."""

    def __init__(self, message, last_valid_time, records=None):
        super().__init__(message)
        self.last_valid_time = last_valid_time
        self.records = list(records) if records else []
