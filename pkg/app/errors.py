"""
Errors
======
Every failure the library raises derives from TrainingError.

Each error carries a readable `detail` and the process `exit_code` the
command layer should use when it surfaces the error.
"""

from typing import Optional


class TrainingError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DimensionMismatch(TrainingError, ValueError):
    pass


class NotPositiveDefinite(TrainingError):
    """Cholesky factorization met a pivot at or below the floor."""

    def __init__(self, detail: str, pivot_index: Optional[int] = None, pivot: Optional[float] = None):
        super().__init__(detail)
        self.pivot_index = pivot_index
        self.pivot = pivot


class SingularNormalEquations(NotPositiveDefinite):
    """J^T J (+ ridge) could not be factored; the caller should grow the ridge."""


class MissingLabels(TrainingError):
    pass


class DataFileNotFound(TrainingError, FileNotFoundError):
    pass


class ParseError(TrainingError):
    def __init__(self, row: int, column: int, reason: str):
        super().__init__(f"row {row}, column {column}: {reason}")
        self.row = row
        self.column = column
        self.reason = reason


class InvalidDataset(TrainingError, ValueError):
    """The file parsed but cannot be trained on (e.g. a single class)."""


class EmptySplit(TrainingError):
    pass


class ConfigError(TrainingError):
    def __init__(self, line: Optional[int], reason: str):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")
        self.line = line
        self.reason = reason


class MismatchedExperiment(TrainingError):
    pass
