"""Exception types shared across the package."""


class CodecError(Exception):
    """Base class for all derdcodec errors."""


class ProfileFormatError(CodecError):
    """Malformed or unknown-key profile / feature-log JSON."""


class KeyMismatchError(CodecError):
    """Profile and feature-count maps do not share the same key sets."""


class InvalidCountsError(CodecError):
    """Feature counts violate their contract (negative, n_g1 > n_coeff, ...)."""


class FitError(CodecError):
    """Profile calibration failed."""


class RankDeficientError(FitError):
    """Least-squares system cannot identify all requested parameters."""

    def __init__(self, message, params=()):
        super().__init__(message)
        self.params = tuple(params)


class BitstreamError(CodecError):
    """Corrupt or truncated bitstream."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class CurveError(CodecError):
    """Invalid rate/energy-quality curve for BD computation."""


class ConfigError(CodecError):
    """Invalid experiment configuration."""
