"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation
    (angle beyond the field of view, radius outside the image circle, ...)."""


class UsageError(ValueError):
    """An operation was called with inconsistent or incomplete arguments."""


class CalibrationError(ValueError):
    """A calibration profile failed schema validation or violates a
    profile invariant; the message names the offending field or invariant."""


class FitError(RuntimeError):
    """Least-squares fitting failed (rank deficiency, degenerate samples)."""
