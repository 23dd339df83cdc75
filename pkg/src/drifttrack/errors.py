"""Exception types shared across the package.

Everything raised on purpose derives from :class:`DriftTrackError` so callers
can catch library failures without swallowing genuine bugs.
"""


class DriftTrackError(Exception):
    """Base class for all errors raised by drifttrack."""


class ParameterError(DriftTrackError, ValueError):
    """A supplied value violates a documented precondition."""


class RegimeError(DriftTrackError):
    """The requested construction is outside its validity regime.

    Raised e.g. when a step-decay schedule is requested in the high
    drift-to-noise regime, or when the decision sensitivity is too large
    for the averaged update to be meaningful.
    """


class OutOfSyncError(DriftTrackError):
    """A stochastic oracle was queried at a time other than the problem's current time."""


class HistoryError(DriftTrackError, LookupError):
    """A past reference was requested that the history window no longer retains."""


class SolverError(DriftTrackError):
    """An internal solve failed: Newton stall, reference mismatch, or a
    fixed-point iteration that stopped contracting."""


class DivergenceError(DriftTrackError):
    """Non-finite values appeared while running an algorithm.

    Carries ``step`` so the failing iteration can be located.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class CalibrationError(DriftTrackError):
    """No noise factor in the searched bracket achieves the target coverage."""
