"""Exception hierarchy.

Errors fall in three families that map to CLI exit codes: configuration
problems (1), data problems (2) and numerical failures (3).
"""


class GEUError(Exception):
    exit_code = 3


class ConfigError(GEUError):
    exit_code = 1


class DataError(GEUError, ValueError):
    exit_code = 2


class NumericalError(GEUError, ArithmeticError):
    exit_code = 3


# shape / argument errors
class DimensionMismatch(DataError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class LengthMismatch(DimensionMismatch):
    pass


# graph construction
class SingleClass(DataError):
    pass


class KTooLarge(DataError):
    pass


# uncertainty
class TooFewSamples(DataError):
    pass


class NegativeVariance(DataError):
    pass


# eigensolver / embedding
class NotPositiveDefinite(NumericalError):
    pass


class InsufficientPositiveEigenvalues(NumericalError):
    pass


# classifier
class EmptyModel(DataError):
    pass


# data module
class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingLabelColumn(DataError):
    pass


class NonNumericFeature(ParseError):
    def __init__(self, line, column, value):
        self.column = column
        self.value = value
        super().__init__(f"non-numeric value {value!r} in column {column!r}", line)


class ClassTooSmall(DataError):
    pass


class NotTwoDimensional(DataError):
    pass


class SizeTooLarge(DataError):
    pass


class SizeTooSmall(DataError):
    pass
