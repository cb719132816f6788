"""Exception types shared across the toolkit."""


class SizeError(ValueError):
    """Register or matrix larger than the configured cap."""


class ValidationError(ValueError):
    """Input violates a structural invariant (unitarity, hermiticity, schema)."""


class NumericalError(ArithmeticError):
    """An iterative routine failed to converge or produced non-finite values."""


class ConfigError(ValidationError):
    """Experiment configuration is malformed, incomplete or inconsistent."""
