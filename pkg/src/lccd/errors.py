"""Exception hierarchy shared by every stage of the pipeline."""


class LCCDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(LCCDError, ValueError):
    """Malformed data handed to an operation (shapes, ranges, empty sets)."""


class InvalidConfigError(LCCDError, ValueError):
    """A parameter or configuration value outside its allowed domain."""


class DataError(LCCDError):
    """Problems with files on disk: corrupt payloads, id mismatches, leakage."""
