"""Exception hierarchy shared by all modules."""


class StableSubError(Exception):
    """Base class for package errors."""


class DomainError(StableSubError, ValueError):
    """Argument outside the domain of an operation."""


class UnsupportedParameterError(StableSubError, ValueError):
    """Parameter combination the operation does not cover (e.g. alpha == 1)."""


class DegenerateError(StableSubError, ValueError):
    """Degenerate input: zero scale, zero direction, constant data."""


class NumericalFailure(StableSubError, RuntimeError):
    """Quadrature or optimizer did not reach the requested accuracy.

    ``diagnostics`` carries whatever the failing routine knew at the time.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(StableSubError, ValueError):
    """Invalid model or simulation configuration."""


class DataError(StableSubError, ValueError):
    """Malformed or inconsistent market data."""
