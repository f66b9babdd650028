"""Exception hierarchy.

The CLI maps the three families onto exit codes: ConfigError -> 1,
DataError -> 2, NumericalError -> 3.
"""


class BesvmError(Exception):
    exit_code = 1


class ConfigError(BesvmError, ValueError):
    exit_code = 1


class DataError(BesvmError, ValueError):
    exit_code = 2


class NumericalError(BesvmError, ArithmeticError):
    exit_code = 3


# data / shape problems
class FileSizeMismatch(DataError):
    pass


class LabelOutOfRange(DataError):
    pass


class SizeSumMismatch(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class DimensionNotDivisible(DataError):
    pass


class CellDimMismatch(DimensionMismatch):
    pass


class RepresentationMismatch(DataError):
    pass


class SingleClassInput(DataError):
    pass


class ClassUndersized(DataError):
    pass


class EmptyFold(DataError):
    pass


class DegenerateInput(DataError):
    pass


class DegenerateBlock(DegenerateInput):
    pass


class ZeroVarianceInput(DataError):
    pass


class KOutOfRange(DataError):
    pass


class UnparseableLabel(ConfigError):
    pass


# numerical failures
class AsymmetricInput(NumericalError, ValueError):
    pass


class NonPSDInput(NumericalError, ValueError):
    pass


class NegativeEigenvalueBeyondTol(NonPSDInput):
    pass


class NonConvergence(NumericalError):
    pass


class NoPositiveEigenvalue(NumericalError, ValueError):
    pass


class NonpositiveQuadraticForm(NumericalError, ValueError):
    pass


class DegenerateCovariance(NumericalError, ValueError):
    pass
