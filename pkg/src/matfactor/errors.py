"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented codes: 1 for I/O and parse problems, 2 for
numerical or degenerate-input problems.
"""

from __future__ import annotations


class MatFactorError(Exception):
    exit_code = 2


class NumericalError(MatFactorError):
    exit_code = 2


class InputError(MatFactorError):
    exit_code = 1


# linear algebra
class NonSymmetric(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message: str, iterations: int):
        super().__init__(message)
        self.iterations = iterations


class RankDeficient(NumericalError):
    pass


class ShapeMismatch(NumericalError):
    pass


# series and estimators
class TooShort(NumericalError):
    pass


class EmptySeries(NumericalError):
    pass


class KOutOfRange(NumericalError):
    pass


class AllZero(NumericalError):
    pass


class DegenerateEigenvalue(NumericalError):
    pass


class DimensionGuard(NumericalError):
    pass


# data generation
class UnstableECM(NumericalError):
    pass


class ConfigError(InputError):
    pass


# metrics and Monte-Carlo
class SingularV(NumericalError):
    pass


class DegenerateStack(NumericalError):
    pass


class Empty(NumericalError):
    pass


class CellAborted(NumericalError):
    pass


# panel ingestion
class MissingCell(InputError):
    pass


class DuplicateCell(InputError):
    pass


class NonPositiveForLog(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
