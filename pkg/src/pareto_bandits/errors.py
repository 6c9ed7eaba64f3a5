"""Exception types raised across the package."""


class BanditError(Exception):
    """Base class for all package errors."""


class ParameterError(BanditError, ValueError):
    """An argument is outside the domain an operation accepts."""


class ValidationError(ParameterError):
    """A serialized or hand-built object violates its invariants."""


class ConfigError(BanditError, ValueError):
    """A run or sweep configuration cannot be executed."""


class SingularDesignError(BanditError, ArithmeticError):
    """The design matrix is singular on the span of the vectors."""


class ConvergenceError(BanditError, RuntimeError):
    """Frank-Wolfe hit its iteration cap before certifying the design.

    The best gap reached is kept on ``self.gap``.
    """

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


class InapplicableOracleError(BanditError, RuntimeError):
    """A deterministic oracle met stochastic dynamics on the executed path."""
