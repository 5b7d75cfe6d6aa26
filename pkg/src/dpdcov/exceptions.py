"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs fail structural validation (shape, range, finiteness)."""


class DegenerateDataError(ValueError):
    """Raised when data carry no usable variation (e.g. a constant column)."""


class NumericError(RuntimeError):
    """Raised when a numeric routine cannot produce a trustworthy result."""
