"""Exception hierarchy shared by every module."""


class RelpotError(Exception):
    """Base class for all library errors."""


class DomainError(RelpotError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularityError(DomainError):
    """Evaluation requested at a point where the kernel is singular."""


class RegimeError(RelpotError, ValueError):
    """Inputs fall outside every regime of a two-sided estimate."""


class RangeError(RelpotError, OverflowError):
    """The result is not representable in double precision."""


class ToleranceError(RelpotError, ArithmeticError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class LookupNameError(RelpotError, KeyError):
    """Unknown kernel, envelope, identity or suite name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
