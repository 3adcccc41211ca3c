"""Exception types shared across the package."""


class GpqError(Exception):
    """Base class for all package errors."""


class ParameterError(GpqError, ValueError):
    """An argument is outside its documented valid range."""


class BracketError(GpqError):
    """Shooting bisection could not bracket the ground-state amplitude."""


class FlowDivergenceError(GpqError):
    """Gradient flow kept increasing the energy after repeated dt halvings."""


class DomainTooSmallError(GpqError):
    """The computational box cannot resolve or contain the state."""


class ConsistencyError(GpqError):
    """Two independent evaluations of the same quantity disagree."""


class ConfigError(GpqError):
    """Invalid run configuration. Carries every validation failure found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
