"""Exception types raised across the package."""


class SmokeFCError(Exception):
    """Base class for package errors."""


class DecodeError(SmokeFCError, ValueError):
    pass


class UnsupportedFormatError(SmokeFCError, ValueError):
    pass


class ConvergenceError(SmokeFCError, RuntimeError):
    """An iterative solver ran out of iterations before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class TrainingError(SmokeFCError, ValueError):
    pass


class ManifestError(SmokeFCError, ValueError):
    pass


class ProtocolError(SmokeFCError, ValueError):
    """Train and test splits violate the per-video separation rule."""


class DatasetError(SmokeFCError, ValueError):
    """Too many images in a run could not be processed."""
