"""Shared exception types, mapped to CLI exit codes (usage/input -> 2, runtime -> 1)."""


class PpgsslError(Exception):
    """Base class for all errors raised by this package."""


class InvalidRecordError(PpgsslError, ValueError):
    """A subject record violates its invariants (empty signal, bad rate, unknown code)."""


class InterchangeFormatError(PpgsslError, ValueError):
    """An interchange file is malformed (bad magic, wrong size, bad version)."""


class TruncatedFileError(InterchangeFormatError):
    """Declared payload lengths do not match the file size."""


class UnsupportedVersionError(InterchangeFormatError):
    """The file declares a format version this reader does not support."""


class ZeroVarianceError(PpgsslError, ValueError):
    """A constant signal cannot be normalized to unit variance."""


class NonFiniteLossError(PpgsslError, RuntimeError):
    """Training produced a NaN/inf loss; carries the epoch and batch index."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class MissingCheckpointError(PpgsslError, FileNotFoundError):
    """A required pretrained encoder checkpoint is absent."""


class InsufficientDataError(PpgsslError, ValueError):
    """Not enough samples/subjects/classes to satisfy a protocol precondition."""
