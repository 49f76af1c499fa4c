"""Exception types raised by ellipsmt."""


class UsageError(ValueError):
    """Invalid arguments passed to a numerical routine."""


class HypothesisError(ValueError):
    """A test function violates the smoothness/support hypothesis f in C0^inf(E)."""


class NumericError(ArithmeticError):
    """Non-finite values appeared in a computed field."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or failed validation."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
