"""Exception hierarchy shared by all wavetomo modules.

Grouped so callers can catch broad classes: ``ValidationError`` covers bad
inputs caught before any work happens, ``DataFormatError`` covers malformed
files, ``ConfigError`` covers bad run configuration, and
``ReconstructionError`` covers failures inside an inversion algorithm.
"""


class WavetomoError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(WavetomoError):
    """Invalid argument or state detected before computation starts."""


class GridSupportError(ValidationError):
    """A state does not fit the requested position grid."""


class KickAliasingError(ValidationError):
    """A momentum kick exceeds the grid's representable phase gradient."""


class ScheduleError(ValidationError):
    """A measurement schedule violates its construction rules."""


class DatasetError(ValidationError):
    """A count dataset is internally inconsistent or incomplete."""


class NonUniformLatticeError(ValidationError):
    """An operation requiring a uniform sample lattice received scattered points."""


class ConfigError(WavetomoError):
    """A run configuration could not be parsed or failed validation."""


class DataFormatError(WavetomoError):
    """A file does not conform to its expected on-disk format."""


class ReconstructionError(WavetomoError):
    """An inversion algorithm cannot produce a result from its inputs."""
