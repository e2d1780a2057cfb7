"""Equidistant parameterization for smooth convex positive f.

With w = sqrt(1 + |∇f|^2) the midset of K and epi f is the image of

    x(t) = t + f ∇f / (1 + w),    y(t) = f w / (1 + w),

and x is a bijection of R^n, so G = y o x^-1. The inverse is computed by
damped Newton; the Jacobian of x satisfies
<∂_v x, v + (∂_v f / (1 + w)) ∇f> >= |v|^2, so it never vanishes.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GradientUnavailable, NegativeRadicand, NoConvergence, NonPositiveField
from .fields import CallableField, DerivativeMode, ScalarField, as_vector, central_difference, parse

logger = logging.getLogger("equimid.parametric")

DEFAULT_NEWTON_TOLERANCE = 1e-12
DEFAULT_NEWTON_MAX_ITERATIONS = 100
DEFAULT_NEWTON_MAX_HALVINGS = 40
DEFAULT_PARAMETRIC_TOLERANCE = 1e-10
DEFAULT_FD_TOLERANCE = 1e-6
DEFAULT_JACOBIAN_TOLERANCE = 1e-9
DEFAULT_MONOTONE_TOLERANCE = 1e-12

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class NewtonSettings:
    tolerance: float = DEFAULT_NEWTON_TOLERANCE
    max_iterations: int = DEFAULT_NEWTON_MAX_ITERATIONS
    max_halvings: int = DEFAULT_NEWTON_MAX_HALVINGS

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("Newton tolerance must be > 0")
        if self.max_iterations <= 0:
            raise ValueError("Newton max_iterations must be > 0")


def damped_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    initial: np.ndarray,
    settings: NewtonSettings,
    label: str = "Newton",
) -> np.ndarray:
    """Solve residual(t) = 0, halving a step until the residual norm drops.

    Converged once |residual| <= tolerance * max(1, |initial|). Raises NoConvergence when the
    iteration cap is hit or no damped step decreases the residual above the tolerance.
    """
    t = np.array(initial, dtype=float)
    current = residual(t)
    norm = float(np.linalg.norm(current))
    threshold = settings.tolerance * max(1.0, float(np.linalg.norm(t)))
    for iteration in range(settings.max_iterations):
        if norm <= threshold:
            logger.debug("%s converged after %d iteration(s), residual %.3e", label, iteration, norm)
            return t
        try:
            step = np.linalg.solve(jacobian(t), -current)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(
                f"{label}: singular Jacobian at {t.tolist()}", iterations=iteration, residual=norm
            ) from exc

        scale = 1.0
        for _ in range(settings.max_halvings + 1):
            candidate = t + scale * step
            candidate_residual = residual(candidate)
            candidate_norm = float(np.linalg.norm(candidate_residual))
            if candidate_norm < norm:
                break
            scale *= 0.5
        else:
            # rounding floor: no step can improve on the current residual
            if norm <= max(threshold, 1e3 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(t)))):
                return t
            logger.warning("%s: damped steps exhausted at %s (residual %.3e)", label, t.tolist(), norm)
            raise NoConvergence(
                f"{label}: no damped step decreases the residual at {t.tolist()}",
                iterations=iteration,
                residual=norm,
            )
        if scale < 1.0:
            logger.debug("%s: step damped to %.3g at iteration %d", label, scale, iteration)
        t, current, norm = candidate, candidate_residual, candidate_norm

    if norm <= threshold:
        return t
    raise NoConvergence(
        f"{label} did not converge in {settings.max_iterations} iterations (residual {norm:.3e})",
        iterations=settings.max_iterations,
        residual=norm,
    )


class EquidistantParameterization:
    """(x(t), y(t)) for a differentiable, convex, positive field."""

    def __init__(self, field: ScalarField, newton: Optional[NewtonSettings] = None):
        if not field.differentiable:
            raise GradientUnavailable(f"{field.describe()} has no gradient; use the bisection solver")
        self.field = field
        self.newton = newton or NewtonSettings()

    @property
    def dimension(self) -> int:
        return self.field.dimension

    def _pieces(self, t: np.ndarray) -> Tuple[float, np.ndarray, float]:
        value = self.field.value(t)
        if not value > 0:
            raise NonPositiveField(f"f({t.tolist()}) = {value} is not positive")
        gradient = self.field.gradient(t)
        return value, gradient, float(np.sqrt(1.0 + gradient @ gradient))

    def param_point(self, t: object) -> Tuple[np.ndarray, float]:
        point = as_vector(t, self.dimension)
        value, gradient, w = self._pieces(point)
        return point + value * gradient / (1.0 + w), value * w / (1.0 + w)

    def x(self, t: object) -> np.ndarray:
        return self.param_point(t)[0]

    def y(self, t: object) -> float:
        return self.param_point(t)[1]

    def g(self, t: object) -> np.ndarray:
        """(x - t) / y, which simplifies to ∇f / w."""
        point = as_vector(t, self.dimension)
        _, gradient, w = self._pieces(point)
        return gradient / w

    def gradient_of_G(self, t: object) -> np.ndarray:
        """∇G at x(t): g / (1 + sqrt(1 - |g|^2))."""
        g = self.g(t)
        return g / (1.0 + np.sqrt(1.0 - g @ g))

    def directional_derivative(self, t: object, v: object, method: str = ANALYTIC) -> np.ndarray:
        point = as_vector(t, self.dimension)
        direction = as_vector(v, self.dimension)
        if method == FINITE_DIFFERENCE:
            return central_difference(self.x, point, direction)
        if method != ANALYTIC:
            raise ValueError(f"Unknown derivative method {method!r}")
        value, gradient, w = self._pieces(point)
        along = float(gradient @ direction)
        hessian_along = self.field.hess_vec(point, direction)
        weight_rate = (along * (1.0 + w) * w - value * float(gradient @ hessian_along)) / ((1.0 + w) ** 2 * w)
        return direction + weight_rate * gradient + value / (1.0 + w) * hessian_along

    def jacobian(self, t: object, method: Optional[str] = None) -> np.ndarray:
        if method is None:
            method = FINITE_DIFFERENCE if self.field.hessian_mode is DerivativeMode.NONE else ANALYTIC
        basis = np.eye(self.dimension)
        columns = [self.directional_derivative(t, basis[i], method) for i in range(self.dimension)]
        return np.column_stack(columns)

    def invert_x(self, target: object, initial: Optional[object] = None) -> np.ndarray:
        goal = as_vector(target, self.dimension)
        start = goal if initial is None else as_vector(initial, self.dimension)
        return damped_newton(
            lambda t: self.x(t) - goal,
            self.jacobian,
            start,
            self.newton,
            label=f"x-inversion at {goal.tolist()}",
        )

    def eval_G(self, x: object) -> float:
        return self.y(self.invert_x(x))

    def G_gradient(self, x: object) -> np.ndarray:
        return self.gradient_of_G(self.invert_x(x))

    def as_field(self) -> CallableField:
        """G = y o x^-1 as a field, with the exact gradient from the gradient relation."""
        return CallableField(
            self.eval_G, self.dimension, gradient=self.G_gradient, name=f"G of {self.field.describe()}"
        )

    def paraboloid_height(self, s: object, x: object) -> float:
        """Height over x of the paraboloid equidistant from K and the point (s, f(s))."""
        anchor = as_vector(s, self.dimension)
        offset = as_vector(x, self.dimension) - anchor
        value = self.field.value(anchor)
        return float(offset @ offset / (2.0 * value) + value / 2.0)

    def paraboloid_gradient(self, s: object, x: object) -> np.ndarray:
        anchor = as_vector(s, self.dimension)
        return (as_vector(x, self.dimension) - anchor) / self.field.value(anchor)

    def jacobian_bound_check(
        self,
        t: object,
        directions: Sequence[object],
        method: str = ANALYTIC,
        tolerance: float = DEFAULT_JACOBIAN_TOLERANCE,
    ) -> "JacobianBoundReport":
        point = as_vector(t, self.dimension)
        _, gradient, w = self._pieces(point)
        report = JacobianBoundReport(parameter=point.tolist(), tolerance=tolerance, method=method)
        for raw in directions:
            direction = as_vector(raw, self.dimension)
            direction = direction / np.linalg.norm(direction)
            derivative = self.directional_derivative(point, direction, method)
            pairing = direction + float(gradient @ direction) / (1.0 + w) * gradient
            margin = float(derivative @ pairing) - float(direction @ direction)
            report.margins.append(margin)
            if margin < -tolerance:
                report.violations += 1
        return report

    def envelope_check(
        self, t: object, probes: Sequence[object], tolerance: float = DEFAULT_PARAMETRIC_TOLERANCE
    ) -> "EnvelopeReport":
        """Paraboloid family membership, tangency and below-ness at x(t)."""
        point = as_vector(t, self.dimension)
        x, y = self.param_point(point)
        report = EnvelopeReport(parameter=point.tolist(), tolerance=tolerance)
        report.membership_residual = abs(self.paraboloid_height(point, x) - y)
        report.tangency_residual = float(
            np.linalg.norm(self.paraboloid_gradient(point, x) - self.gradient_of_G(point))
        )
        for probe in probes:
            gap = self.paraboloid_height(probe, x) - y
            report.probe_gaps.append(gap)
            if gap < -tolerance:
                report.probe_violations += 1
        return report


@dataclass
class JacobianBoundReport:
    parameter: List[float]
    tolerance: float
    method: str = ANALYTIC
    margins: List[float] = field(default_factory=list)
    violations: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0

    @property
    def worst_margin(self) -> float:
        return min(self.margins) if self.margins else 0.0

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "jacobian",
            "passed": self.passed,
            "parameter": self.parameter,
            "method": self.method,
            "margins": self.margins,
            "worst_margin": self.worst_margin,
            "violations": self.violations,
            "tolerance": self.tolerance,
        }


@dataclass
class EnvelopeReport:
    parameter: List[float]
    tolerance: float
    membership_residual: float = 0.0
    tangency_residual: float = 0.0
    probe_gaps: List[float] = field(default_factory=list)
    probe_violations: int = 0

    @property
    def membership_ok(self) -> bool:
        return self.membership_residual <= self.tolerance

    @property
    def tangency_ok(self) -> bool:
        return self.tangency_residual <= self.tolerance

    @property
    def below_ok(self) -> bool:
        return self.probe_violations == 0

    @property
    def passed(self) -> bool:
        return self.membership_ok and self.tangency_ok and self.below_ok

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "envelope",
            "passed": self.passed,
            "parameter": self.parameter,
            "membership_ok": self.membership_ok,
            "membership_residual": self.membership_residual,
            "tangency_ok": self.tangency_ok,
            "tangency_residual": self.tangency_residual,
            "below_ok": self.below_ok,
            "probe_gaps": self.probe_gaps,
            "tolerance": self.tolerance,
        }


@dataclass
class ParamValidationInput:
    """User-supplied maps x: R^n -> R^n and y: R^n -> R^+ plus the sample grid."""

    x_fn: Callable[[np.ndarray], np.ndarray]
    y_fn: Callable[[np.ndarray], float]
    dimension: int
    samples: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def from_parameterization(
        cls, parameterization: EquidistantParameterization, samples: Sequence[object]
    ) -> "ParamValidationInput":
        return cls(
            x_fn=parameterization.x,
            y_fn=parameterization.y,
            dimension=parameterization.dimension,
            samples=[as_vector(s, parameterization.dimension) for s in samples],
        )

    @classmethod
    def from_expressions(
        cls, x_sources: Sequence[str], y_source: str, dimension: int, samples: Sequence[object]
    ) -> "ParamValidationInput":
        if len(x_sources) != dimension:
            raise ValueError(f"Need {dimension} x component(s), got {len(x_sources)}")
        components = [parse(source, dimension) for source in x_sources]
        height = parse(y_source, dimension)
        return cls(
            x_fn=lambda t: np.array([component.value(t) for component in components]),
            y_fn=height.value,
            dimension=dimension,
            samples=[as_vector(s, dimension) for s in samples],
        )


def reconstruct_f(data: ParamValidationInput, t: object) -> float:
    """f(t) = y + sqrt(y^2 - |x - t|^2)."""
    point = as_vector(t, data.dimension)
    offset = np.asarray(data.x_fn(point), dtype=float) - point
    height = float(data.y_fn(point))
    radicand = height * height - float(offset @ offset)
    if radicand < 0:
        raise NegativeRadicand(f"y^2 < |x - t|^2 at t = {point.tolist()} (|g| >= 1)")
    return height + float(np.sqrt(radicand))


@dataclass
class ParamValidationReport:
    samples_checked: int
    tolerance: float
    worst_g: float = 0.0
    g_bound_ok: bool = True
    worst_gradient_residual: float = 0.0
    gradient_relation_ok: bool = True
    worst_monotone_inner: float = float("inf")
    worst_monotone_pair: Optional[Tuple[int, int]] = None
    monotone_ok: bool = True

    @property
    def passed(self) -> bool:
        return self.g_bound_ok and self.gradient_relation_ok and self.monotone_ok

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "parameterization",
            "passed": self.passed,
            "samples_checked": self.samples_checked,
            "g_bound_ok": self.g_bound_ok,
            "worst_g": self.worst_g,
            "gradient_relation_ok": self.gradient_relation_ok,
            "worst_gradient_residual": self.worst_gradient_residual,
            "monotone_ok": self.monotone_ok,
            "worst_monotone_inner": self.worst_monotone_inner,
            "worst_monotone_pair": list(self.worst_monotone_pair) if self.worst_monotone_pair else None,
            "note": "no violation found on grid" if self.passed else "violation found on grid",
            "tolerance": self.tolerance,
        }


def validate_parameterization(
    data: ParamValidationInput,
    tolerance: float = DEFAULT_FD_TOLERANCE,
    monotone_tolerance: float = DEFAULT_MONOTONE_TOLERANCE,
) -> ParamValidationReport:
    """Check |g| < 1, the gradient relation and monotonicity of X on the samples.

    The gradient relation is <∂_i x, g> / (1 + sqrt(1 - |g|^2)) = ∂_i y with
    derivatives by central differences; X = g / sqrt(1 - |g|^2) is checked
    pairwise for <X(a) - X(b), a - b> >= 0.
    """
    report = ParamValidationReport(samples_checked=len(data.samples), tolerance=tolerance)
    basis = np.eye(data.dimension)
    potentials: List[Optional[np.ndarray]] = []

    for t in data.samples:
        x = np.asarray(data.x_fn(t), dtype=float)
        y = float(data.y_fn(t))
        g = (x - t) / y if y > 0 else np.full(data.dimension, np.inf)
        size = float(np.linalg.norm(g))
        report.worst_g = max(report.worst_g, size)
        if not size < 1.0:
            report.g_bound_ok = False
            potentials.append(None)
            continue
        root = float(np.sqrt(1.0 - g @ g))
        potentials.append(g / root)
        for i in range(data.dimension):
            dx = central_difference(data.x_fn, t, basis[i])
            dy = float(central_difference(data.y_fn, t, basis[i]))
            lhs = float(dx @ g) / (1.0 + root)
            residual = abs(lhs - dy) / max(1.0, abs(dy))
            report.worst_gradient_residual = max(report.worst_gradient_residual, residual)
            if residual > tolerance:
                report.gradient_relation_ok = False

    for (i, first), (j, second) in itertools.combinations(enumerate(potentials), 2):
        if first is None or second is None:
            continue
        inner = float((first - second) @ (data.samples[i] - data.samples[j]))
        if inner < report.worst_monotone_inner:
            report.worst_monotone_inner = inner
            report.worst_monotone_pair = (i, j)
        if inner < -monotone_tolerance:
            report.monotone_ok = False
    logger.debug("Parameterization check: %s", report.to_mapping())
    return report
