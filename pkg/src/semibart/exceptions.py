"""Exception types raised by semibart."""


class SemiBartError(ValueError):
    """Base class for user-facing errors."""


class DataError(SemiBartError):
    """Raised when an input dataset cannot be loaded or is invalid."""


class DesignError(SemiBartError):
    """Raised for an invalid linear-term specification."""


class SamplerError(SemiBartError):
    """Raised when the MCMC cannot proceed (bad config, numerical blowup)."""


class ReplicationError(SemiBartError):
    """Raised when one replication of a simulation study fails."""
