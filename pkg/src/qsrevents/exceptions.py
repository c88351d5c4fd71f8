"""Exception hierarchy shared by every qsrevents module."""


class QsrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(QsrError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateFrameError(InvalidInputError):
    """A Frenet-Serret frame is degenerate where a proper frame is required."""


class BoundaryExtrapolationError(InvalidInputError):
    """A point is untracked at the start or end of a sequence."""


class InfeasibleDecodeError(QsrError):
    """Every label tuple is excluded by the hard constraints."""
