"""Exception types shared across the package."""


class InvalidRegimeError(ValueError):
    """Raised when scheme parameters fall outside their admissible region."""


class ComplexityBudgetError(RuntimeError):
    """Raised when an exhaustive search would exceed its candidate budget."""


class ConfigError(ValueError):
    """Raised for malformed experiment configs or family files."""
