"""Exception hierarchy for MMSOUND.

Every error carries the process exit code the command-line driver uses
when it escapes a command.
"""


class SounderError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 3


# Usage / configuration (exit 2)

class ConfigError(SounderError):
    """Invalid run configuration or command-line input."""

    exit_code = 2


class SounderIOError(SounderError):
    """A file could not be read or written."""

    exit_code = 2


class SpecError(SounderError):
    """A scene or waveform specification cannot be realized."""

    exit_code = 2


# Data errors (exit 3)

class FormatError(SounderError):
    """Malformed capture or calibration file."""


class DimensionError(SounderError):
    """Tensor or grid dimensions do not agree."""


class DataError(SounderError):
    """Non-finite or otherwise invalid sample values."""


class GridError(SounderError):
    """Angle not on the beam grid, or grid invariants violated."""


class GridConflictError(GridError):
    """Sector captures overlap outside their boundary angles."""


class MissingBeamError(SounderError):
    """A beam pair required for a complete grid is absent."""


class RangeError(SounderError):
    """Delay outside the unambiguous delay range."""


class InsufficientDataError(SounderError):
    """Too few samples for the requested statistic."""


class DomainError(SounderError):
    """Argument outside the mathematical domain of the operation."""


# Numerical degeneracy (exit 4)

class DegenerateError(SounderError):
    """Zero variance, zero noise floor or degenerate geometry."""

    exit_code = 4


class RankDeficiencyError(DegenerateError):
    """Regression design matrix is rank deficient."""


class ConditioningError(DegenerateError):
    """Calibration response too small for element-wise division."""


class NoSignalError(DegenerateError):
    """No power above the noise gate."""


class StageError(SounderError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: SounderError):
        """Wrap a stage failure.

        Args:
            stage: Pipeline stage name
            cause: Original error
        """
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code
