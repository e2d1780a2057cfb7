"""Scalar fields f: R^n -> R with optional derivative access."""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .dsl import Expr, parse_expression
from .dual import Dual, primal, tangent
from .errors import DimensionError, EmptyFamily, NonDifferentiable

logger = logging.getLogger("equimid.fields")

DEFAULT_FD_RELATIVE_STEP = 1e-6


class DerivativeMode(str, Enum):
    EXACT = "exact"
    FINITE_DIFFERENCE = "finite_difference"
    NONE = "none"


def as_vector(value: object, dimension: Optional[int] = None) -> np.ndarray:
    vector = np.atleast_1d(np.asarray(value, dtype=float))
    if vector.ndim != 1:
        raise DimensionError(f"Expected a vector, got shape {vector.shape}")
    if dimension is not None and vector.shape[0] != dimension:
        raise DimensionError(f"Expected dimension {dimension}, got {vector.shape[0]}")
    return vector


def fd_step(t: np.ndarray, relative: float = DEFAULT_FD_RELATIVE_STEP) -> float:
    return relative * max(1.0, float(np.linalg.norm(t)))


def central_difference(
    fn: Callable[[np.ndarray], object],
    t: np.ndarray,
    direction: np.ndarray,
    step: Optional[float] = None,
) -> np.ndarray:
    """(fn(t + h v) - fn(t - h v)) / 2h, for scalar or vector valued fn."""
    h = fd_step(t) if step is None else step
    forward = np.asarray(fn(t + h * direction), dtype=float)
    backward = np.asarray(fn(t - h * direction), dtype=float)
    return (forward - backward) / (2.0 * h)


def central_difference_gradient(fn: Callable[[np.ndarray], float], t: np.ndarray) -> np.ndarray:
    basis = np.eye(t.shape[0])
    return np.array([float(central_difference(fn, t, basis[i])) for i in range(t.shape[0])])


class ScalarField(ABC):
    """A function R^n -> R; the focal-generating f or a candidate G."""

    gradient_mode: DerivativeMode = DerivativeMode.FINITE_DIFFERENCE
    hessian_mode: DerivativeMode = DerivativeMode.FINITE_DIFFERENCE

    def __init__(self, dimension: int):
        if dimension < 1:
            raise DimensionError(f"Dimension must be >= 1, got {dimension}")
        self.dimension = dimension

    @abstractmethod
    def _value(self, t: np.ndarray) -> float: ...

    def value(self, t: object) -> float:
        return float(self._value(as_vector(t, self.dimension)))

    __call__ = value

    def values(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at each row of an (m, n) array."""
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.array([self._value(row) for row in points], dtype=float)

    @property
    def differentiable(self) -> bool:
        return self.gradient_mode is not DerivativeMode.NONE

    def gradient(self, t: object) -> np.ndarray:
        point = as_vector(t, self.dimension)
        if self.gradient_mode is DerivativeMode.NONE:
            raise NonDifferentiable(f"{self.describe()} has no gradient")
        if self.gradient_mode is DerivativeMode.EXACT:
            return self._exact_gradient(point)
        return central_difference_gradient(self._value, point)

    def hess_vec(self, t: object, v: object) -> np.ndarray:
        """Directional derivative of the gradient, ∂_v ∇f."""
        point = as_vector(t, self.dimension)
        direction = as_vector(v, self.dimension)
        if self.hessian_mode is DerivativeMode.NONE or self.gradient_mode is DerivativeMode.NONE:
            raise NonDifferentiable(f"{self.describe()} has no Hessian")
        if self.hessian_mode is DerivativeMode.EXACT:
            return self._exact_hess_vec(point, direction)
        return central_difference(self.gradient, point, direction)

    def _exact_gradient(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _exact_hess_vec(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return f"{type(self).__name__}(n={self.dimension})"


class ExpressionField(ScalarField):
    """Field defined by the expression language, differentiated by dual numbers."""

    def __init__(self, expr: Expr, dimension: int, source: str = ""):
        super().__init__(dimension)
        self.expr = expr
        self.source = source or expr.to_source()
        smooth = expr.is_smooth()
        self.gradient_mode = DerivativeMode.EXACT if smooth else DerivativeMode.NONE
        self.hessian_mode = DerivativeMode.EXACT if smooth else DerivativeMode.NONE

    def _value(self, t: np.ndarray) -> float:
        return float(self.expr.evaluate(list(t)))

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        columns = [points[:, i] for i in range(self.dimension)]
        result = np.asarray(self.expr.evaluate(columns), dtype=float)
        return np.broadcast_to(result, (points.shape[0],)).copy()

    def _exact_gradient(self, t: np.ndarray) -> np.ndarray:
        basis = np.eye(self.dimension)
        gradient = np.empty(self.dimension)
        for j in range(self.dimension):
            seeded = [Dual(t[i], basis[j, i]) for i in range(self.dimension)]
            gradient[j] = float(tangent(self.expr.evaluate(seeded)))
        return gradient

    def _exact_hess_vec(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        basis = np.eye(self.dimension)
        result = np.empty(self.dimension)
        for j in range(self.dimension):
            seeded = [Dual(Dual(t[i], v[i]), Dual(basis[j, i], 0.0)) for i in range(self.dimension)]
            outer = self.expr.evaluate(seeded)
            result[j] = float(primal(tangent(tangent(outer)))) if isinstance(outer, Dual) else 0.0
        return result

    def describe(self) -> str:
        return f"f(t) = {self.source} (n={self.dimension})"


class MinField(ScalarField):
    """Pointwise minimum of a finite family; has no derivatives."""

    gradient_mode = DerivativeMode.NONE
    hessian_mode = DerivativeMode.NONE

    def __init__(self, members: Sequence[ScalarField]):
        if not members:
            raise EmptyFamily("The pointwise minimum needs at least one member")
        dimensions = {member.dimension for member in members}
        if len(dimensions) != 1:
            raise DimensionError(f"Members have different dimensions: {sorted(dimensions)}")
        super().__init__(members[0].dimension)
        self.members = tuple(members)

    def _value(self, t: np.ndarray) -> float:
        return min(member.value(t) for member in self.members)

    def values(self, points: np.ndarray) -> np.ndarray:
        return np.minimum.reduce([member.values(points) for member in self.members])

    def describe(self) -> str:
        return "min(" + ", ".join(member.describe() for member in self.members) + ")"


class CallableField(ScalarField):
    """Wraps Python callables; gradients fall back to central differences."""

    def __init__(
        self,
        fn: Callable[[np.ndarray], float],
        dimension: int,
        gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        name: str = "",
    ):
        super().__init__(dimension)
        self._fn = fn
        self._gradient = gradient
        self.name = name or getattr(fn, "__name__", "callable")
        self.gradient_mode = DerivativeMode.EXACT if gradient is not None else DerivativeMode.FINITE_DIFFERENCE
        self.hessian_mode = DerivativeMode.FINITE_DIFFERENCE

    def _value(self, t: np.ndarray) -> float:
        return float(self._fn(t))

    def _exact_gradient(self, t: np.ndarray) -> np.ndarray:
        assert self._gradient is not None
        return np.asarray(self._gradient(t), dtype=float)

    def describe(self) -> str:
        return f"{self.name} (n={self.dimension})"


def parse(source: str, dimension: int) -> ExpressionField:
    return ExpressionField(parse_expression(source, dimension), dimension, source=source)
