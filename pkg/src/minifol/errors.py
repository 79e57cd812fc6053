"""Exception hierarchy shared by all minifol modules."""


class MinifolError(Exception):
    """Base class for all errors raised by this package."""


class ExpressionSyntaxError(MinifolError):
    """Malformed expression source.

    Attributes:
        position: 0-based character offset of the offending token.
        expected: short description of what the parser was looking for.
    """

    def __init__(self, message, position, expected=None):
        super().__init__(message)
        self.position = position
        self.expected = expected


class UnknownIdentifierError(MinifolError):
    """Identifier that is neither a variable in range, a constant, nor a function."""

    def __init__(self, message, name, position=None):
        super().__init__(message)
        self.name = name
        self.position = position


class ArityError(MinifolError):
    """Function called with the wrong number of arguments."""


class SchemaError(MinifolError):
    """Config document does not conform to the map-definition schema."""


class DimensionError(SchemaError):
    """Map dimensions violate 1 <= m < n."""


class DomainError(SchemaError):
    """Degenerate domain box (min[i] >= max[i] somewhere)."""


class EvaluationError(MinifolError):
    """Expression hit a singular point (division by zero, log of nonpositive, ...).

    Carries the offending point and a printable rendering of the
    sub-expression that failed, so callers never ingest silent NaNs.
    """

    def __init__(self, message, point=None, subexpr=None):
        super().__init__(message)
        self.point = None if point is None else tuple(point)
        self.subexpr = subexpr


class DegenerateGradientError(MinifolError):
    """Gradient norm below tolerance where a nonzero normal is required."""


class UnsupportedSignatureError(MinifolError):
    """No extraction routine for this (n, m) pair."""


class SupportOutsideDomainError(MinifolError):
    """Variation-field support ball is not strictly inside the domain box."""
