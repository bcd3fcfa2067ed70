"""Shared error types."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class StabilityError(RuntimeError):
    """A time-step stability precondition is violated."""


class ConditioningError(RuntimeError):
    """A linear system is too ill-conditioned to solve reliably."""


class FixedPointError(RuntimeError):
    """The coupling iteration failed to converge."""

    def __init__(self, message, last_increment=None):
        super().__init__(message)
        self.last_increment = last_increment
