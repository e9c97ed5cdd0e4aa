"""Exception hierarchy shared by all modules."""


class ThermocohError(Exception):
    """Base class for every error raised by this package."""


class SizingError(ThermocohError, ValueError):
    """Operand shapes are incompatible or too large."""


class ValidationError(ThermocohError, ValueError):
    """An input violates a documented precondition."""


class TruncationError(ThermocohError):
    """The Fock cutoff discards more thermal weight than allowed."""


class NumericError(ThermocohError, ArithmeticError):
    """A numerical procedure failed or produced an unphysical state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DomainError(ThermocohError, ValueError):
    """An argument is outside the physical domain (e.g. plate collision)."""


class ConfigError(ThermocohError):
    """A configuration file is malformed or inconsistent."""


class UsageError(ThermocohError, ValueError):
    """A function was called with arguments it cannot work with."""
