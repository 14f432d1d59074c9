"""Exception types shared across the package."""


class OffgridError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(OffgridError, ValueError):
    pass


class EmptyResultError(InvalidArgumentError):
    pass


class GridMismatchError(InvalidArgumentError):
    pass


class DimensionMismatchError(InvalidArgumentError):
    pass


class UnsupportedShapeError(InvalidArgumentError):
    pass


class FormatError(InvalidArgumentError):
    """Malformed binary or text file."""


class NumericalError(OffgridError, ArithmeticError):
    """An SVD or iterative solver failed, or produced non-finite values."""


class ConfigError(InvalidArgumentError):
    """Unknown key or invalid value in an experiment configuration."""


class StageError(OffgridError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
