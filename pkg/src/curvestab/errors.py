"""Exception hierarchy shared by all curvestab modules."""


class CurvestabError(Exception):
    """Base class for library errors."""


class EigenSolverError(CurvestabError):
    """The dense eigen-solver failed to converge."""


class ExpmOverflowError(CurvestabError, OverflowError):
    """A matrix exponential left the representable floating point range."""


class UndefinedCurvatureError(CurvestabError):
    """The velocity vanishes, so no curvature is defined."""


class SingularTransformError(CurvestabError):
    """An equivalence transform matrix is not invertible."""


class InputFormatError(CurvestabError, ValueError):
    """A matrix, block spec or vector could not be parsed."""
