"""Exception hierarchy shared by all modules.

The CLI maps ValidationError (and subclasses) to exit code 2 and
FormatError / OSError to exit code 3.
"""


class LatentmarkError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(LatentmarkError):
    """Array file is malformed or uses an unsupported dtype/shape."""


class ValidationError(LatentmarkError):
    """Input violates a documented invariant (shape, value range, ...)."""


class CapacityError(ValidationError):
    """Message longer than the available element count."""


class ParameterError(ValidationError):
    """Parameter outside its documented domain, or infeasible geometry."""


class CalibrationError(LatentmarkError):
    """Requested operating point cannot be reached by the channel."""


class MetricError(LatentmarkError):
    """Metric undefined for the given inputs (e.g. single-class truth)."""


class ManifestError(ValidationError):
    """Manifest does not match the supplied parameters or files."""
