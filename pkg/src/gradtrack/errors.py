"""Exception taxonomy shared across the pipeline stages.

Every stage failure raises a subclass of GradtrackError with a stable
``code`` string; the harness records the code in the trial status column and
the service maps it onto structured HTTP errors.
"""

from __future__ import annotations


class GradtrackError(Exception):
    """Base class; ``code`` is a stable machine-readable identifier."""

    code = "error"


class ConfigError(GradtrackError):
    """Bad configuration text: unknown key, bad value, violated invariant."""

    code = "config-error"


class UnstableDynamicsError(GradtrackError):
    """Spectral radius of A is not below 1 where stability is required."""

    code = "unstable-dynamics"


class SimulationMisconfiguredError(GradtrackError):
    """Admissibility clamping fired on more than 20% of simulated steps."""

    code = "simulation-misconfigured"


class ExplorationDivergedError(GradtrackError):
    """An exploration iterate left the safety region."""

    code = "exploration-diverged"


class ExcitationError(GradtrackError):
    """A stacked window is rank deficient (persistency of excitation failed)."""

    code = "excitation-error"

    def __init__(self, message: str, window_start: int | None = None):
        super().__init__(message)
        self.window_start = window_start


class IllConditionedWindowError(GradtrackError):
    """Condition number of the window Gram matrix exceeds 1e12."""

    code = "ill-conditioned-window"

    def __init__(self, message: str, window_start: int | None = None):
        super().__init__(message)
        self.window_start = window_start


class InsufficientDataError(GradtrackError):
    """Too few reconstructed estimates for the requested identification."""

    code = "insufficient-data"


class IllConditionedMomentsError(GradtrackError):
    """Instrument moment matrix is numerically singular."""

    code = "ill-conditioned-moments"


class NonconvergenceError(GradtrackError):
    """Newton recovery failed to reach tolerance within the iteration cap."""

    code = "nonconvergence"

    def __init__(self, message: str, x_best=None, residual_norm: float | None = None):
        super().__init__(message)
        self.x_best = x_best
        self.residual_norm = residual_norm
