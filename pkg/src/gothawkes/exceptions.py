"""Exception types raised across the package."""


class GotHawkesError(Exception):
    """Base class for all package errors."""


class ValidationError(GotHawkesError, ValueError):
    """Input data or parameters violate a documented invariant."""


class InstabilityError(GotHawkesError):
    """The branching matrix has spectral radius too close to (or above) one."""


class DegenerateIntensity(GotHawkesError):
    """An event falls where the model intensity is zero."""


class SamplerExhausted(GotHawkesError):
    """Too many rejected draws while sampling a stable study model."""


class DimensionMismatch(ValidationError):
    pass


class UnknownFormation(ValidationError):
    pass


class UnorderedEvents(ValidationError):
    pass


class MissingLineup(ValidationError):
    pass


class ItemMismatch(ValidationError):
    pass


class NoConvergence(RuntimeWarning):
    """Inner solve hit its iteration cap; the best iterate is kept."""
