"""Exception hierarchy shared across the package."""


class NaideError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(NaideError):
    """Invalid configuration: bad layer dims, even k, non-positive sigma, ..."""


class ShapeError(NaideError):
    """Array shapes disagree with the declared contract."""


class ParseError(NaideError):
    """Malformed image file; message carries the byte offset where known."""


class DataError(NaideError):
    """Unusable input data: missing files, empty directories, mismatches."""


class TrainingError(NaideError):
    """Optimization failed, typically a non-finite loss or gradient."""
