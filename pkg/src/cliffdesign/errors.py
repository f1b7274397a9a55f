"""Exception types shared across modules (the CLI maps them to exit codes)."""


class DimensionError(ValueError):
    """Objects with incompatible lengths or dimensions."""


class ResourceLimitError(ValueError):
    """A size parameter beyond what the exact or dense routines support."""


class ConditioningError(ArithmeticError):
    """A Gram matrix too close to singular to invert."""
