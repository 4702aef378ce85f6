"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: usage errors exit 1,
validation errors 2, data errors 3, numeric failures 4.
"""


class EchosyncError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class UsageError(EchosyncError):
    """Bad command line invocation."""

    exit_code = 1


class ValidationError(EchosyncError):
    """An argument or configuration value violates a precondition."""

    exit_code = 2


class ShapeError(ValidationError):
    """An array input does not match its declared dimensions."""


class RangeError(ValidationError):
    """A value lies outside its permitted range (e.g. offset longer than signal)."""


class DataError(EchosyncError):
    """Input data is malformed, missing, or insufficient."""

    exit_code = 3


class FormatError(DataError):
    """A file does not follow its expected on-disk format."""


class TruncationError(FormatError):
    """A binary payload has a length inconsistent with its metadata."""


class EmptyDataError(DataError):
    """An operation received no usable data."""


class CapacityError(DataError):
    """A pool of utterances is too small to satisfy an experiment plan."""


class UnsyncableError(DataError):
    """No candidate offset leaves enough signal to evaluate."""


class NumericFailureError(EchosyncError):
    """A numeric computation produced non-finite values."""

    exit_code = 4


class StoreError(EchosyncError):
    """A session/judgment store operation violates the experiment protocol."""


class SequenceError(StoreError):
    """An action targets a stimulus other than the session cursor."""


class LimitError(StoreError):
    """The per-side play cap has been exhausted."""


class PreconditionError(StoreError):
    """A judgment was submitted before the playback rules were satisfied."""


class ConflictError(StoreError):
    """A duplicate judgment for the same stimulus."""
