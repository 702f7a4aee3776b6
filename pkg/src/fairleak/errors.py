"""Exception hierarchy.

Three families map onto the CLI exit-code contract: configuration problems
(exit 2), data problems (exit 3) and numerical failures (exit 4).
"""


class FairleakError(Exception):
    pass


class ConfigError(FairleakError, ValueError):
    exit_code = 2


class DataError(FairleakError, ValueError):
    exit_code = 3


class NumericError(FairleakError, ArithmeticError):
    exit_code = 4


# -- configuration ---------------------------------------------------------

class InvalidSpec(ConfigError):
    pass


class InvalidConfig(ConfigError):
    pass


class OutOfRange(ConfigError):
    pass


# -- data ------------------------------------------------------------------

class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column {name!r}")
        self.name = name


class NonBinaryValue(DataError):
    def __init__(self, row, col, value=None):
        super().__init__(f"non-binary value {value!r} in column {col!r} at row {row}")
        self.row = row
        self.col = col


class UnparseableNumeric(DataError):
    def __init__(self, row, col, value=None):
        super().__init__(f"cannot parse {value!r} in column {col!r} at row {row}")
        self.row = row
        self.col = col


class ScoreOutOfRange(DataError):
    def __init__(self, row, value=None):
        super().__init__(f"score {value!r} at row {row} is outside [0, 1]")
        self.row = row


class EmptyDataset(DataError):
    pass


class AmbiguousColumns(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class CensoringViolation(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class SingleClassActual(DataError):
    pass


class SingleClassSensitive(DataError):
    pass


class EmptyCell(DataError):
    def __init__(self, s, y):
        super().__init__(f"no records with S={s}, Y={y}")
        self.s = s
        self.y = y


class DegenerateGroups(DataError):
    pass


class EmptyInput(DataError):
    pass


class ZeroTotal(DataError):
    pass


class DegenerateCell(DataError):
    pass


class NotEqOdds(DataError):
    pass


# -- numerics --------------------------------------------------------------

class NonFiniteLoss(NumericError):
    pass
