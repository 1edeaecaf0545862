"""Exception types shared across the package."""


class FusetrackError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateInputError(FusetrackError, ValueError):
    """An argument violates a documented precondition (zero vector, negative
    time, out-of-range level, wrong array length, ...)."""


class AliasRiskError(FusetrackError):
    """A requested echo lies beyond the maximum unambiguous range of the
    chirp configuration and would alias into a wrong range bin."""


class ConfigurationError(FusetrackError):
    """A configuration value (or combination of values) is invalid.

    ``field`` holds a dotted path into the config file when the error was
    produced by the loader, e.g. ``"radar.num_samples"``.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class OutOfCalibrationError(FusetrackError):
    """A measured echo lies above the calibration curve maximum by more than
    the accepted noise allowance; the curve cannot be inverted."""
