"""Exception hierarchy for intercurve."""


class IntercurveError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(IntercurveError, ValueError):
    pass


class SymmetryError(IntercurveError, ValueError):
    """Input lacks a required symmetry (non-symmetric form, broken curvature identities)."""


class FrameError(IntercurveError, ValueError):
    """A frame is not orthonormal with respect to its metric."""


class RangeError(IntercurveError, ValueError):
    """An integer parameter such as ``m`` is out of its admissible range."""


class ParseError(IntercurveError, ValueError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownIdentifierError(ParseError):
    def __init__(self, name, position=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", position)


class ExpressionDomainError(IntercurveError, ArithmeticError):
    """Evaluation left the real domain of the expression."""

    def __init__(self, message, subexpression=None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in {subexpression}"
        super().__init__(message)


class SingularMetricError(IntercurveError, ArithmeticError):
    pass


class CollarError(IntercurveError, ValueError):
    """Operation needs a Fermi collar chart or a point on the boundary face."""


class GlueError(IntercurveError, ValueError):
    pass


class ConfigError(IntercurveError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
