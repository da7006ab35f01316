"""Exception types shared across the package."""


class ShelabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ShelabError):
    """A grid, experiment, or estimator was configured inconsistently."""


class DomainError(ShelabError):
    """An operation was asked to act outside its mathematical domain."""
