"""Exception hierarchy shared by all elss modules."""

import numpy as np


class ElssError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(ElssError, ValueError):
    pass


class ShapeError(ElssError, ValueError):
    pass


class ParseError(ElssError, ValueError):
    """A data file could not be parsed; message carries the row/column."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class LabelError(ElssError, ValueError):
    pass


class TaskMismatchError(ElssError, ValueError):
    pass


class InsufficientSamplesError(ElssError, ValueError):
    pass


class ConfigError(ElssError, ValueError):
    pass


class DegenerateError(ElssError, ArithmeticError):
    pass


class SingularError(ElssError, np.linalg.LinAlgError):
    pass


class NotPDError(ElssError, np.linalg.LinAlgError):
    pass


class ConvergenceError(ElssError, RuntimeError):
    pass


class NonConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""
