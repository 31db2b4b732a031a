"""Exception hierarchy shared by every module."""


class RatelessError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RatelessError, ValueError):
    pass


class DomainError(RatelessError, ValueError):
    pass


class ConvergenceError(RatelessError, RuntimeError):
    pass


class FormatError(RatelessError, ValueError):
    """Malformed on-disk data (bad magic, truncated records, ...)."""


class ConsistencyError(RatelessError, ValueError):
    pass


class ModeError(RatelessError, ValueError):
    pass


class ConfigError(RatelessError, ValueError):
    pass


class InputError(RatelessError, ValueError):
    pass


class TrainingError(RatelessError, RuntimeError):
    """Raised when optimisation hits a non-finite gradient."""
