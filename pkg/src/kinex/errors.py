"""Exception types shared across kinex modules."""


class KinexError(Exception):
    """Base class for all kinex errors."""


class InvalidConfig(KinexError):
    """Malformed simulation or experiment configuration."""


class NonIntegrable(KinexError):
    """A Monte Carlo moment estimate failed to stabilize."""


class ZeroMean(KinexError):
    """Rescaling requested on a state whose empirical mean is zero."""


class UnequalTotals(KinexError):
    """Coupled initial conditions do not share the same total wealth."""


class EmptyMeasure(KinexError):
    """An operation received an empirical measure with no atoms."""


class DegenerateModel(KinexError):
    """A closed-form bound is not defined for this coefficient model."""


class InvalidRate(KinexError):
    """A decay-rate argument that must be positive was not."""
