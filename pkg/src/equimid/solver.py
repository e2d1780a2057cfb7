"""Equidistant function G of K and epi f for any positive continuous f.

For each base x the height z = G(x) is the unique root of
z -> d((x, z), L) - z on (0, f(x)): the residual is positive at z = 0 and
negative at z = f(x), so plain bisection brackets it without any
smoothness assumption on f.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .errors import BoxTooSmall, DimensionError, EmptyFamily, NoConvergence, NonPositiveField, OracleFailure
from .fields import ScalarField, as_vector
from .geometry import EpigraphFocal, SpacePoint, distance_to_epigraph, distance_to_hyperplane

if TYPE_CHECKING:
    from .parametric import EquidistantParameterization

logger = logging.getLogger("equimid.solver")

DEFAULT_SOLVER_TOLERANCE = 1e-10
DEFAULT_MAX_BISECTION_ITERATIONS = 80
DEFAULT_MONOTONICITY_TOLERANCE = 1e-10
DEFAULT_CONVEXITY_TOLERANCE = 1e-8


def equidistance_residual(x: np.ndarray, z: float, focal: EpigraphFocal) -> float:
    """d((x, z), L) - d((x, z), K) for z >= 0."""
    point = SpacePoint(x, z)
    try:
        return distance_to_epigraph(point, focal).distance - distance_to_hyperplane(point)
    except BoxTooSmall as exc:
        raise OracleFailure(f"Distance oracle failed at base {point.base.tolist()}, height {z}: {exc}") from exc


def solve_G_at(
    x: object,
    f: ScalarField,
    focal: Optional[EpigraphFocal] = None,
    tolerance: float = DEFAULT_SOLVER_TOLERANCE,
    bracket: Optional[Tuple[float, float]] = None,
    max_iterations: int = DEFAULT_MAX_BISECTION_ITERATIONS,
) -> float:
    """G(x) by bisection; ``focal`` defaults to epi f with the automatic search box.

    Any ``bracket`` straddling the sign change may be passed instead of
    [0, f(x)]; the root is unique so the answer does not depend on it.
    """
    base = as_vector(x, f.dimension)
    if focal is None:
        focal = EpigraphFocal(f)
    elif focal.dimension != f.dimension:
        raise DimensionError(f"Focal dimension {focal.dimension} does not match field dimension {f.dimension}")
    field_at_base = f.value(base)
    if not field_at_base > 0:
        raise NonPositiveField(f"f({base.tolist()}) = {field_at_base} is not positive")

    low, high = bracket if bracket is not None else (0.0, field_at_base)
    if not 0.0 <= low < high:
        raise ValueError(f"Invalid bracket [{low}, {high}]")

    def residual(z: float) -> float:
        return equidistance_residual(base, z, focal)

    at_low, at_high = residual(low), residual(high)
    if at_low == 0.0:
        return float(low)
    if at_high == 0.0:
        return float(high)
    if at_low * at_high > 0:
        raise ValueError(f"Bracket [{low}, {high}] does not straddle the equidistant height at {base.tolist()}")

    # the residual has slope in [-2, 0], so a bracket of width tol/2 bounds it by tol
    root, result = bisect(
        residual,
        low,
        high,
        xtol=tolerance / 2.0,
        maxiter=max_iterations,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        raise NoConvergence(
            f"Bisection at {base.tolist()} did not converge in {max_iterations} iterations",
            iterations=result.iterations,
            residual=residual(root),
        )
    logger.debug("G(%s) = %.17g after %d bisection steps", base.tolist(), root, result.iterations)
    return float(root)


def side_of_midset(x: object, y: float, focal: EpigraphFocal) -> int:
    """+1 above the graph of G (closer to L than to K), -1 below, 0 on it."""
    residual = equidistance_residual(as_vector(x, focal.dimension), y, focal)
    return int(-np.sign(residual))


class EquidistantFunction:
    """Evaluable G: R^n -> R^+, by bisection or as y o x^-1."""

    def __init__(
        self,
        evaluator: Callable[[np.ndarray], float],
        dimension: int,
        mode: str,
        tolerance: float = DEFAULT_SOLVER_TOLERANCE,
        description: str = "",
        generator: Optional[ScalarField] = None,
    ):
        self._evaluator = evaluator
        self.dimension = dimension
        self.mode = mode
        self.tolerance = tolerance
        self.description = description or mode
        self.generator = generator

    @classmethod
    def by_bisection(
        cls,
        f: ScalarField,
        focal: Optional[EpigraphFocal] = None,
        tolerance: float = DEFAULT_SOLVER_TOLERANCE,
    ) -> "EquidistantFunction":
        resolved = focal if focal is not None else EpigraphFocal(f)
        return cls(
            lambda x: solve_G_at(x, f, resolved, tolerance=tolerance),
            f.dimension,
            mode="bisect",
            tolerance=tolerance,
            description=f"bisection G of {f.describe()}",
            generator=f,
        )

    @classmethod
    def by_parameterization(
        cls, parameterization: "EquidistantParameterization", tolerance: float = DEFAULT_SOLVER_TOLERANCE
    ) -> "EquidistantFunction":
        return cls(
            parameterization.eval_G,
            parameterization.dimension,
            mode="parametric",
            tolerance=tolerance,
            description=f"y o x^-1 of {parameterization.field.describe()}",
            generator=parameterization.field,
        )

    def __call__(self, x: object) -> float:
        return float(self._evaluator(as_vector(x, self.dimension)))

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.dimension)
        return np.array([self(row) for row in points], dtype=float)

    def __repr__(self) -> str:
        return f"EquidistantFunction({self.description}, n={self.dimension})"


def min_compose(functions: Sequence[EquidistantFunction], x: object) -> float:
    """min_i G_i(x); equals the G of min_i f_i."""
    if not functions:
        raise EmptyFamily("min_compose needs at least one equidistant function")
    dimensions = {fn.dimension for fn in functions}
    if len(dimensions) != 1:
        raise DimensionError(f"Family members have different dimensions: {sorted(dimensions)}")
    return min(fn(x) for fn in functions)


STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_PRECONDITION_UNMET = "precondition_unmet"


@dataclass
class MonotonicityReport:
    status: str
    samples_checked: int
    violations: int = 0
    worst_margin: float = float("inf")
    worst_sample: Optional[List[float]] = None
    tolerance: float = DEFAULT_MONOTONICITY_TOLERANCE
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == STATUS_PASS

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "monotonicity",
            "status": self.status,
            "passed": self.passed,
            "samples_checked": self.samples_checked,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "worst_sample": self.worst_sample,
            "tolerance": self.tolerance,
            "message": self.message,
        }


def monotonicity_check(
    f1: ScalarField,
    f2: ScalarField,
    samples: Sequence[object],
    tolerance: float = DEFAULT_MONOTONICITY_TOLERANCE,
    solver_tolerance: float = DEFAULT_SOLVER_TOLERANCE,
) -> MonotonicityReport:
    """f1 < f2 everywhere sampled should give G1 < G2 there."""
    if f1.dimension != f2.dimension:
        raise DimensionError(f"Fields have different dimensions: {f1.dimension} vs {f2.dimension}")
    points = [as_vector(sample, f1.dimension) for sample in samples]
    report = MonotonicityReport(status=STATUS_PASS, samples_checked=len(points), tolerance=tolerance)
    for point in points:
        if not f1.value(point) < f2.value(point):
            report.status = STATUS_PRECONDITION_UNMET
            report.worst_sample = point.tolist()
            report.message = f"f1 < f2 fails at {point.tolist()}; the comparison is vacuous"
            logger.info("Monotonicity precondition unmet at %s", point.tolist())
            return report

    first = EquidistantFunction.by_bisection(f1, tolerance=solver_tolerance)
    second = EquidistantFunction.by_bisection(f2, tolerance=solver_tolerance)
    for point in points:
        margin = second(point) - first(point)
        if margin < report.worst_margin:
            report.worst_margin = margin
            report.worst_sample = point.tolist()
        if margin <= -tolerance:
            report.violations += 1
    if report.violations:
        report.status = STATUS_FAIL
        report.message = f"G1 >= G2 at {report.violations} sample(s)"
    return report


@dataclass
class ConvexityReport:
    triples_checked: int
    violations: int = 0
    max_violation: float = 0.0
    worst_triple: Optional[int] = None
    tolerance: float = DEFAULT_CONVEXITY_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "convexity",
            "passed": self.passed,
            "triples_checked": self.triples_checked,
            "violations": self.violations,
            "max_violation": self.max_violation,
            "worst_triple": self.worst_triple,
            "tolerance": self.tolerance,
        }


def convexity_check(
    G: Callable[[np.ndarray], float],
    triples: Sequence[Tuple[object, object, float]],
    tolerance: float = DEFAULT_CONVEXITY_TOLERANCE,
) -> ConvexityReport:
    """G(λa + (1-λ)b) <= λG(a) + (1-λ)G(b) on each (a, b, λ)."""
    report = ConvexityReport(triples_checked=len(triples), tolerance=tolerance)
    for index, (a, b, weight) in enumerate(triples):
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"Convex weight must lie in [0, 1], got {weight}")
        first, second = as_vector(a), as_vector(b)
        blend = weight * first + (1.0 - weight) * second
        excess = G(blend) - (weight * G(first) + (1.0 - weight) * G(second))
        if excess > report.max_violation:
            report.max_violation = excess
            report.worst_triple = index
        if excess > tolerance:
            report.violations += 1
    return report


def random_triples(
    lower: float, upper: float, dimension: int, count: int, seed: int = 0
) -> List[Tuple[np.ndarray, np.ndarray, float]]:
    rng = np.random.default_rng(seed)
    return [
        (rng.uniform(lower, upper, dimension), rng.uniform(lower, upper, dimension), float(rng.uniform()))
        for _ in range(count)
    ]


@dataclass
class ContinuityReport:
    """Advisory only: a large jump hints at a discontinuity but proves nothing."""

    samples: int
    spacing: float
    max_jump: float
    max_jump_at: List[float] = field(default_factory=list)

    @property
    def slope_estimate(self) -> float:
        return self.max_jump / self.spacing if self.spacing > 0 else float("inf")

    @property
    def passed(self) -> bool:
        return True

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "continuity",
            "advisory": True,
            "samples": self.samples,
            "spacing": self.spacing,
            "max_jump": self.max_jump,
            "max_jump_at": self.max_jump_at,
            "slope_estimate": self.slope_estimate,
        }


def continuity_probe(
    G: Callable[[np.ndarray], float],
    center: object,
    radius: float,
    count: int = 101,
    direction: Optional[object] = None,
) -> ContinuityReport:
    """Sample G densely on a segment through ``center`` and report the largest jump."""
    if count < 2:
        raise ValueError("continuity_probe needs at least two samples")
    origin = as_vector(center)
    heading = np.eye(origin.shape[0])[0] if direction is None else as_vector(direction, origin.shape[0])
    heading = heading / np.linalg.norm(heading)
    offsets = np.linspace(-radius, radius, count)
    values = np.array([G(origin + offset * heading) for offset in offsets])
    jumps = np.abs(np.diff(values))
    worst = int(np.argmax(jumps))
    midpoint = origin + 0.5 * (offsets[worst] + offsets[worst + 1]) * heading
    return ContinuityReport(
        samples=count,
        spacing=float(offsets[1] - offsets[0]),
        max_jump=float(jumps[worst]),
        max_jump_at=midpoint.tolist(),
    )
