"""
Exception taxonomy.

Every error raised on bad input data derives from GridwaveError, which the
CLI maps to exit code 1. Subclasses also derive from the builtin that fits
their category so plain ``except ValueError`` callers keep working.
"""


class GridwaveError(Exception):
    """Base class for domain errors"""


class ImageFileMissing(GridwaveError, FileNotFoundError):
    pass


class UnsupportedImageFormat(GridwaveError, ValueError):
    pass


class CorruptImageData(GridwaveError, ValueError):
    pass


class ImageWriteError(GridwaveError, OSError):
    pass


class ImageTooSmall(GridwaveError, ValueError):
    pass


class ChannelError(GridwaveError, ValueError):
    pass


class ShapeMismatch(GridwaveError, ValueError):
    pass


class DivisibilityError(GridwaveError, ValueError):
    pass


class LagOutOfRange(GridwaveError, ValueError):
    pass


class PeriodOutOfRange(GridwaveError, ValueError):
    pass


class NonFiniteValues(GridwaveError, ArithmeticError):
    pass


class ConfigError(GridwaveError, ValueError):
    pass


class DatasetError(GridwaveError, ValueError):
    pass


class CheckpointError(GridwaveError, ValueError):
    pass


class ReportWriteError(GridwaveError, OSError):
    pass
