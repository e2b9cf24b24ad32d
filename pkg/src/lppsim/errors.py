"""Exception types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


class BudgetError(RuntimeError):
    """Memory or enumeration budget exceeded (exit code 4)."""


class AcceptanceFailure(RuntimeError):
    """Oracle-check battery found a disagreement (exit code 5)."""
