"""Exception hierarchy shared by the solver modules."""


class GlmMhdError(Exception):
    """Base class for every error raised by glmmr."""


class NonPositiveDensity(GlmMhdError):
    pass


class NonPositivePressure(GlmMhdError):
    pass


class ZeroTimeStep(GlmMhdError):
    pass


class NonPositiveCh(GlmMhdError):
    pass


class SolverFailure(GlmMhdError):
    """Raised when a flux or update produces non-finite values.

    ``where`` carries the offending cell/face indices when known.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class EmptyGrid(GlmMhdError):
    pass


class MissingChild(GlmMhdError):
    pass


class IncompleteStencil(GlmMhdError):
    pass


class LevelOutOfRange(GlmMhdError):
    pass


class MaxLevelReached(GlmMhdError):
    pass


class EmptyHistory(GlmMhdError):
    pass


class IncompatibleDomains(GlmMhdError):
    pass


class IncompatibleRuns(GlmMhdError):
    pass


class DomainMismatch(GlmMhdError):
    pass


class ConfigError(GlmMhdError):
    pass
