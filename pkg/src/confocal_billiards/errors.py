"""Exception hierarchy.

Every error class carries a distinct process exit code used by the CLI; code 1
is reserved for "ran fine but a numerical check failed".
"""


class BilliardError(Exception):
    exit_code = 64


class ParseError(BilliardError):
    exit_code = 2


class ValidationError(BilliardError):
    exit_code = 3


class IoError(BilliardError):
    exit_code = 4


class DegenerateQuadric(BilliardError):
    exit_code = 5


class NotOnQuadric(BilliardError):
    exit_code = 6


class ZeroGradient(BilliardError):
    exit_code = 7


class PoleAtInfinity(BilliardError):
    exit_code = 8


class InvalidCoords(BilliardError):
    exit_code = 9


class LineOnQuadric(BilliardError):
    exit_code = 10


class DegenerateLine(BilliardError):
    exit_code = 11


class TangentialIncidence(BilliardError):
    exit_code = 12


class LinesNotConcurrent(BilliardError):
    exit_code = 13


class NoRealIntersection(BilliardError):
    exit_code = 14


class DegenerateConfiguration(BilliardError):
    exit_code = 15


class NoForwardIntersection(BilliardError):
    exit_code = 16


class DegenerateCaustic(BilliardError):
    exit_code = 17


class BranchPoint(BilliardError):
    exit_code = 18


class InvalidSkew(BilliardError):
    exit_code = 19


class NoSignChange(BilliardError):
    exit_code = 20


class CausticMismatch(BilliardError):
    exit_code = 21


class SearchFailed(BilliardError):
    exit_code = 22


class EmptyGrid(BilliardError):
    exit_code = 23


class NoFit(BilliardError):
    exit_code = 24


ERROR_CLASSES = [
    ParseError,
    ValidationError,
    IoError,
    DegenerateQuadric,
    NotOnQuadric,
    ZeroGradient,
    PoleAtInfinity,
    InvalidCoords,
    LineOnQuadric,
    DegenerateLine,
    TangentialIncidence,
    LinesNotConcurrent,
    NoRealIntersection,
    DegenerateConfiguration,
    NoForwardIntersection,
    DegenerateCaustic,
    BranchPoint,
    InvalidSkew,
    NoSignChange,
    CausticMismatch,
    SearchFailed,
    EmptyGrid,
    NoFit,
]
