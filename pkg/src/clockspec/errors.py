"""Exception hierarchy shared by all modules."""


class ClockspecError(Exception):
    """Base class for all package errors."""


class ConfigError(ClockspecError, ValueError):
    """Invalid model, amplitude or experiment configuration."""


class DomainError(ClockspecError, ValueError):
    """Argument outside the domain of an operation (e.g. kappa <= 0)."""


class NumericError(ClockspecError, ArithmeticError):
    """A computation could not be completed to the requested accuracy."""


class PrecisionExhausted(NumericError):
    """Fixed-point orbit ran out of trustworthy bits."""


class RootFindingError(NumericError):
    """An eigenvalue could not be isolated inside its bracket."""
