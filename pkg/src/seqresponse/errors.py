"""Exception types shared across the package."""


class SeqResponseError(Exception):
    """Base class for all library errors."""


class NotExpanding(SeqResponseError):
    """The probed minimum of the lift derivative is <= 1."""


class NoConvergence(SeqResponseError):
    """An iterative root solve failed to reach its residual target."""


class DegreeMismatch(SeqResponseError):
    """Two maps that must share a covering degree do not."""


class KickTooLarge(SeqResponseError):
    """eps * ||X'||_inf is too large for h_eps to be a diffeomorphism."""


class DimensionMismatch(SeqResponseError):
    """Grid sizes of interacting objects disagree."""


class WindowExceeded(SeqResponseError):
    """A composition or series asked for indices outside the schedule window."""


class NotConverged(SeqResponseError):
    """Pullback iteration residual stayed above the requested tolerance."""


class TailNotSmall(SeqResponseError):
    """The certified Neumann tail bound exceeds the requested tolerance."""


class MNotFound(SeqResponseError):
    """No block length M <= 10**4 satisfies the weak-contraction conditions."""


class ConfigError(SeqResponseError):
    """An experiment config file is missing a field or holds a bad value."""
