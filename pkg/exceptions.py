# exceptions.py
from typing import Optional


class TensorKitError(Exception):
    """Base error; carries the process exit status and a human-readable detail."""

    exit_code = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class UsageError(TensorKitError):
    exit_code = 2


class DataError(TensorKitError, ValueError):
    exit_code = 3


class MemoryBudgetError(DataError):
    pass


class UnderdeterminedError(DataError):
    """A mode slice has no observed entries, so its factor row cannot be estimated."""

    def __init__(self, mode: int, index: int):
        super().__init__(f"Mode {mode} slice {index} has no observed entries; completion is underdetermined.")
        self.mode = mode
        self.index = index


class NumericalError(TensorKitError):
    exit_code = 4
