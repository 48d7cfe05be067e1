"""Exception hierarchy for the reconstruction trainer."""


class AfmReconError(Exception):
    """Base class for errors raised by this package."""


class ShapeMismatch(AfmReconError):
    """A tensor does not have the shape a contract requires."""


class InvalidConfig(AfmReconError):
    """A configuration value is out of range or inconsistent."""


class DataError(AfmReconError):
    """A dataset file is missing, malformed, or fails integrity checks."""
