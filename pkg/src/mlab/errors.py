"""Exception and warning types raised across the engine."""


class MlabError(Exception):
    """Base class for all engine errors."""


class ConfigurationError(MlabError, ValueError):
    """Invalid grid, state, or run configuration."""


class ResolutionError(ConfigurationError):
    """A feature is too narrow for the grid spacing."""


class TruncationError(MlabError):
    """Distribution mass reaches the edge of the grid box."""


class DomainError(MlabError):
    """Operation not defined on this kind of grid."""


class SequencingError(MlabError):
    """Operation invoked at a time where it is not allowed (e.g. an off-integer kick)."""


class NumericalBlowupError(MlabError, FloatingPointError):
    """Non-finite values appeared during a run."""


class IntegrityError(MlabError):
    """A transform or matrix failed an internal consistency check."""


class MisuseError(MlabError, ValueError):
    """API called with incompatible inputs."""


class DegenerateForceError(MlabError):
    """The force vanishes (or is linear) so the localization ratio is undefined."""


class TruncationWarning(UserWarning):
    """A moment's integrand has visible weight on the boundary cells."""


class StepSizeError(MlabError):
    """A stochastic step drifted too far before renormalization; reduce dt."""
