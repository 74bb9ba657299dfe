"""Exception types raised at the library boundary."""


class LpConvError(Exception):
    """Base class for all errors raised by lpconv."""


class DomainError(LpConvError, ValueError):
    """An argument lies outside the numeric domain the library supports."""


class SingularityError(LpConvError, ZeroDivisionError):
    """A quotient was requested at a point where both sides vanish."""


class NumericError(LpConvError, ArithmeticError):
    """A non-finite intermediate value appeared during a computation."""


class PreconditionError(LpConvError, ValueError):
    """Inputs are well formed but violate an operation's precondition."""


class StructuralError(LpConvError, ValueError):
    """Functions live on different measure spaces or have mismatched shapes."""
