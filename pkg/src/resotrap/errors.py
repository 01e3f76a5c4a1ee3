"""Exception hierarchy.

Two families: ``ValidationError`` for bad input (CLI exit 1) and
``NumericalError`` for solver/numeric failures (CLI exit 2).
"""


class ResotrapError(Exception):
    pass


class ValidationError(ResotrapError, ValueError):
    pass


class NumericalError(ResotrapError, ArithmeticError):
    pass


class ConstructionError(NumericalError):
    """Model construction produced an invalid spectrum (e.g. degenerate levels)."""


class PoleHitError(NumericalError):
    pass


class DivergedError(NumericalError):
    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


class CollisionSuspectedError(NumericalError):
    pass


class LostRootError(NumericalError):
    def __init__(self, msg, alpha=None, labels=()):
        super().__init__(msg)
        self.alpha = alpha
        self.labels = tuple(labels)


class SelfOrthogonalError(NumericalError):
    pass


class NotEigenvalueError(NumericalError):
    pass


class OracleFailure(NumericalError):
    pass


class NoSolutionError(NumericalError):
    pass


class OutOfDomainError(NumericalError):
    pass
