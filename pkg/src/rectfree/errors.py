"""Exception hierarchy shared by all rectfree modules."""
from __future__ import annotations


class RectfreeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(RectfreeError, ValueError):
    """A caller-supplied parameter is outside the supported range."""


class BudgetExhaustedError(RectfreeError):
    """A bounded search ran out of budget before reaching a result.

    Carries ``resume`` (an in-memory, serialisable snapshot of the run)
    and ``rows_examined`` so the caller can persist a checkpoint and
    continue later with a larger budget.
    """

    def __init__(self, message: str, *, resume=None, rows_examined: int = 0):
        super().__init__(message)
        self.resume = resume
        self.rows_examined = rows_examined


class ConstraintViolationError(RectfreeError):
    """Supplied parameters violate a documented precondition."""


class InvariantViolationError(RectfreeError):
    """An internal invariant failed; indicates a bug, never bad input."""


class SizeLimitError(RectfreeError):
    """An input exceeds the size budget of an intentionally bounded check."""


class CheckpointError(RectfreeError):
    """Base class for checkpoint load failures."""


class CorruptCheckpointError(CheckpointError):
    """Checkpoint bytes fail checksum or structural validation."""


class VersionMismatchError(CheckpointError):
    """Checkpoint was written by an unknown or unsupported format version."""
