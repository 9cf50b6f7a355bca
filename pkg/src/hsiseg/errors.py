"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument errors; the subclasses
below exist where callers need to distinguish the failure mode.
"""


class FormatError(ValueError):
    """A binary file has a bad magic, header, or unsupported field."""


class TruncatedError(ValueError):
    """A binary file declares more payload than it contains."""


class ShapeError(ValueError):
    """Tensor shapes are inconsistent with the requested operation."""


class DegenerateDataError(ValueError):
    """Input data carries no usable variation (e.g. zero covariance)."""


class UndefinedMetricError(ValueError):
    """A metric's denominator is empty for the requested class."""


class NumericError(ValueError):
    """A numerical routine failed (e.g. singular matrix after regularization)."""
