"""Exception hierarchy.

Every error carries a ``category`` used by the command-line front end to
pick an exit code: PARSE, DIM, BUDGET, DOMAIN or STAT.
"""


class QmatError(Exception):
    category = "DOMAIN"


class ExprSyntaxError(QmatError):
    category = "PARSE"

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownMatrix(QmatError):
    category = "PARSE"


class UnknownFunction(QmatError):
    category = "PARSE"


class DimensionMismatch(QmatError):
    category = "DIM"

    def __init__(self, path, got, expected):
        super().__init__(f"dimension mismatch at {path or '<root>'}: got {got}, expected {expected}")
        self.path = path
        self.got = got
        self.expected = expected


class NonSquare(QmatError):
    category = "DIM"


class EmptyVector(QmatError):
    category = "DIM"


class ZeroVector(QmatError):
    category = "DIM"


class DimMismatch(QmatError):
    category = "DIM"


class MalformedEmbedding(QmatError):
    category = "DIM"


class NotHermitian(QmatError):
    category = "DOMAIN"


class NonUnitary(QmatError):
    category = "DOMAIN"


class DomainViolation(QmatError):
    category = "DOMAIN"


class NotPositiveDefinite(DomainViolation):
    pass


class InvalidP(QmatError):
    category = "DOMAIN"


class BudgetInfeasible(QmatError):
    category = "BUDGET"


class PrecisionOverflow(QmatError):
    category = "STAT"


class RotationOverflow(QmatError):
    category = "STAT"


class PostselectionStarved(QmatError):
    category = "STAT"


class ShiftTooSmall(QmatError):
    category = "STAT"
