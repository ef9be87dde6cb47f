"""Exception hierarchy.

The CLI maps each family to an exit code: configuration/parse problems to 1,
resource caps to 2, violated mathematical preconditions to 3.
"""


class RandDynError(Exception):
    """Base class for all package errors."""


class ConfigError(RandDynError):
    pass


class ParseError(ConfigError, ValueError):
    pass


class ResourceLimitError(RandDynError):
    pass


class MathPreconditionError(RandDynError):
    """A mathematical hypothesis required by an operation does not hold."""

    precondition = "math precondition"


class ArityError(MathPreconditionError, ValueError):
    precondition = "arity mismatch"


class DegreeMismatchError(MathPreconditionError, ValueError):
    precondition = "degree mismatch"


class ZeroInputError(MathPreconditionError, ValueError):
    precondition = "all-zero input"


class DimensionMismatchError(MathPreconditionError, ValueError):
    precondition = "dimension mismatch"


class UnknownLabelError(MathPreconditionError, KeyError):
    precondition = "unknown label"


class IndeterminatePoint(MathPreconditionError):
    """Every defining form vanishes at the point."""

    precondition = "IndeterminatePoint"

    def __init__(self, message, point=None, step=None):
        super().__init__(message)
        self.point = point
        self.step = step


class NotAMorphismError(MathPreconditionError):
    precondition = "NotAMorphism"


class ZeroVarianceError(MathPreconditionError):
    precondition = "ZeroVariance"


class EscapeImpossible(MathPreconditionError):
    precondition = "EscapeImpossible"

    def __init__(self, message, point=None, closure=None):
        super().__init__(message)
        self.point = point
        self.closure = closure


class DegeneratePointError(MathPreconditionError):
    precondition = "DegenerateHeights"


class BudgetExceededError(ResourceLimitError):
    pass


class EpsUnreachableError(ResourceLimitError):
    pass
