"""Error taxonomy shared by every module.

Each error maps to a CLI exit code: ArgumentError -> 2, data/state/format
errors -> 3, NumericError -> 4.
"""


class S3FError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ArgumentError(S3FError):
    """Invalid argument value (bad fraction, zero samples, empty inputs)."""

    exit_code = 2


class IngestError(S3FError):
    """CSV could not be ingested (missing cell, ragged row, unreadable file)."""

    exit_code = 3


class SchemaError(S3FError):
    """Shape or schema mismatch between data and a fitted object."""

    exit_code = 3


class StateError(S3FError):
    """Operation applied in the wrong state (e.g. scaling twice)."""

    exit_code = 3


class ModeError(S3FError):
    """Method/bank mismatch (e.g. CS3F asked to handle categorical features)."""

    exit_code = 3


class FormatError(S3FError):
    """Persisted artifact is missing, corrupt, or of an unknown version."""

    exit_code = 3


class SizeError(S3FError):
    """Input exceeds a configured size limit; subsample first."""

    exit_code = 3


class NumericError(S3FError):
    """Non-finite values where finite numbers are required."""

    exit_code = 4

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
