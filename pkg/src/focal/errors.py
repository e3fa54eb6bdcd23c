"""Exception types shared across the package."""


class FocalError(Exception):
    """Base class for package errors."""


class DataError(FocalError):
    """A dataset, checkpoint, or metrics file is malformed or inconsistent."""


class UsageError(FocalError):
    """Invalid configuration or command-line usage."""


class InteractiveAbort(FocalError):
    """The interactive oracle hit end-of-input; completed records are kept."""

    def __init__(self, message: str, records=None):
        super().__init__(message)
        self.records = records if records is not None else []
