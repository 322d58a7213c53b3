class ConfigurationError(ValueError):
    """Raised for invalid user-facing configuration (sizes, flags, shapes)."""


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's precondition."""
