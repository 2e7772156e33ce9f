"""Exception types shared across the package."""


class SrtAnnealError(Exception):
    """Base class for all package errors."""


class DimensionError(SrtAnnealError):
    """Array lengths or Hilbert-space dimensions do not match."""


class CapacityError(SrtAnnealError):
    """Requested system size exceeds a configured exhaustive/dense limit."""


class ValidationError(SrtAnnealError):
    """Input data violates a structural invariant (range, graph membership)."""


class UndefinedObjectiveError(SrtAnnealError):
    """Objective is undefined, e.g. average coupling of an edgeless graph."""


class SingularityError(SrtAnnealError):
    """A formula was evaluated at a parameter where it is singular."""


class ConvergenceError(SrtAnnealError):
    """Iterative eigensolver failed to reach the requested residual."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class IntegrationError(SrtAnnealError):
    """Time integration failed (step-size underflow / stiffness)."""

    def __init__(self, message, last_good_t=None):
        super().__init__(message)
        self.last_good_t = last_good_t


class ConstructionError(SrtAnnealError):
    """A searched instance construction found no admissible assignment."""


class ConfigError(SrtAnnealError):
    """Experiment configuration file is invalid."""
