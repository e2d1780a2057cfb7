"""Exception hierarchy shared by every equimid module."""
from __future__ import annotations

from typing import Iterable, Tuple


class EquimidError(Exception):
    """Base class for all equimid failures."""


class DimensionError(EquimidError, ValueError):
    """A vector, variable index or family member has the wrong dimension."""


class ExpressionSyntaxError(EquimidError, ValueError):
    def __init__(self, message: str, position: int, expected: Iterable[str] = ()):
        self.position = position
        self.expected: Tuple[str, ...] = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class NonDifferentiable(EquimidError, ValueError):
    """Derivatives were requested from a field built with abs/min/max."""


class GradientUnavailable(EquimidError, ValueError):
    """An operation needs a gradient the field cannot provide."""


class NonPositiveField(EquimidError, ValueError):
    """The generating function was not strictly positive where sampled."""


class NegativeRadicand(EquimidError, ValueError):
    """y² < |x − t|², i.e. the |g| < 1 precondition is violated."""


class GradientBoundViolated(EquimidError, ValueError):
    """|∇G| ≥ 1 where the Y field is requested."""


class EmptyFamily(EquimidError, ValueError):
    """The min-composition received no member functions."""


class BoxTooSmall(EquimidError, RuntimeError):
    """The closest-point minimiser touched the caller's search box."""

    def __init__(self, message: str, parameter: Tuple[float, ...] = ()):
        self.parameter = parameter
        super().__init__(message)


class OracleFailure(EquimidError, RuntimeError):
    """The distance oracle could not answer even after enlarging its box."""


class NoConvergence(EquimidError, RuntimeError):
    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)
