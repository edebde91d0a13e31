"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Raised when a measure, function or kernel has incompatible size."""


class InvalidMeasure(ValueError):
    """Raised when weights do not form a probability vector."""


class ModelError(ValueError):
    """Raised for malformed model definitions or out-of-range generations."""


class OracleUnavailable(RuntimeError):
    """Raised when an exact flow oracle does not exist for a model."""


class DegenerateRate(ValueError):
    """Raised when a Bernstein rate has a zero denominator at zero deviation."""
