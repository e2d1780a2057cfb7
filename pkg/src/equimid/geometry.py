"""Distances to the focal sets K = {(t, 0)} and L = epi f.

The epigraph oracle is brute force on purpose: a grid scan followed by a
bounded local refinement. Every other module is checked against it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import BoxTooSmall, DimensionError, NonPositiveField
from .fields import ScalarField, as_vector

logger = logging.getLogger("equimid.geometry")

DEFAULT_GRID_POINTS = 64
DEFAULT_STEP_TOLERANCE = 1e-12
DEFAULT_MAX_BOX_DOUBLINGS = 6
DEFAULT_MAX_REFINE_ITERATIONS = 500
DEFAULT_REFINE_CANDIDATES = 4
DEFAULT_LIPSCHITZ_TOLERANCE = 1e-9
BOX_FACE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpacePoint:
    """A point (t, y) of R^{n+1}: ``base`` holds t, ``height`` holds y."""

    base: np.ndarray
    height: float

    def __post_init__(self) -> None:
        base = as_vector(self.base).copy()
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "height", float(self.height))

    @property
    def dimension(self) -> int:
        return int(self.base.shape[0])

    def as_array(self) -> np.ndarray:
        return np.append(self.base, self.height)

    def distance_to(self, other: "SpacePoint") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    def to_mapping(self) -> Dict[str, Any]:
        return {"base": self.base.tolist(), "height": self.height}


@dataclass(frozen=True)
class SearchBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = as_vector(self.lower)
        upper = as_vector(self.upper, lower.shape[0])
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("Search box bounds must be finite")
        if np.any(upper <= lower):
            raise ValueError(f"Search box upper bounds must exceed lower bounds: {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def around(cls, center: object, half_width: object) -> "SearchBox":
        c = as_vector(center)
        return cls(c - half_width, c + half_width)

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[0])

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def doubled(self) -> "SearchBox":
        half = self.upper - self.lower
        return SearchBox(self.center - half, self.center + half)

    def intersect(self, other: "SearchBox") -> Optional["SearchBox"]:
        lower = np.maximum(self.lower, other.lower)
        upper = np.minimum(self.upper, other.upper)
        if np.any(upper <= lower):
            return None
        return SearchBox(lower, upper)


@dataclass(frozen=True)
class OracleSettings:
    grid_points: int = DEFAULT_GRID_POINTS
    step_tolerance: float = DEFAULT_STEP_TOLERANCE
    max_box_doublings: int = DEFAULT_MAX_BOX_DOUBLINGS
    max_refine_iterations: int = DEFAULT_MAX_REFINE_ITERATIONS
    refine_candidates: int = DEFAULT_REFINE_CANDIDATES

    def __post_init__(self) -> None:
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.step_tolerance <= 0:
            raise ValueError("step_tolerance must be > 0")
        if self.max_box_doublings < 0:
            raise ValueError("max_box_doublings must be >= 0")
        if self.refine_candidates < 1:
            raise ValueError("refine_candidates must be >= 1")


@dataclass(frozen=True)
class EpigraphFocal:
    """The closed focal set L = epi f together with its oracle configuration."""

    field: ScalarField
    search_box: Optional[SearchBox] = None
    settings: OracleSettings = field(default_factory=OracleSettings)

    def __post_init__(self) -> None:
        if self.search_box is not None and self.search_box.dimension != self.field.dimension:
            raise DimensionError(
                f"Search box dimension {self.search_box.dimension} "
                f"does not match field dimension {self.field.dimension}"
            )

    @property
    def dimension(self) -> int:
        return self.field.dimension

    def contains(self, p: SpacePoint) -> bool:
        """Whether p lies in epi f."""
        return p.height >= self.field.value(p.base)


@dataclass(frozen=True)
class ClosestPointResult:
    point: SpacePoint
    distance: float
    parameter: np.ndarray

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "point": self.point.to_mapping(),
            "distance": self.distance,
            "parameter": np.asarray(self.parameter).tolist(),
        }


def distance_to_hyperplane(p: SpacePoint) -> float:
    return abs(p.height)


def distance_to_epigraph(p: SpacePoint, focal: EpigraphFocal) -> ClosestPointResult:
    """Closest point of epi f to ``p`` by grid scan plus local refinement.

    Points below the graph are answered with the distance to the graph
    itself, points inside the epigraph with distance 0. The scan runs over
    the cube of half-width f(x) - y around the base x (no graph point
    outside it can beat the vertical drop), intersected with the caller's
    search box if one was given. When the minimiser sits on a face of the
    caller's box the box is doubled, up to ``max_box_doublings`` times,
    before BoxTooSmall is raised.
    """
    if p.dimension != focal.dimension:
        raise DimensionError(f"Point dimension {p.dimension} does not match focal dimension {focal.dimension}")
    settings = focal.settings
    field_at_base = focal.field.value(p.base)
    if not field_at_base > 0:
        raise NonPositiveField(f"f({p.base.tolist()}) = {field_at_base} is not positive")
    if focal.contains(p):
        return ClosestPointResult(point=p, distance=0.0, parameter=p.base.copy())

    reach = field_at_base - p.height
    local = SearchBox.around(p.base, reach)
    box = focal.search_box
    for attempt in range(settings.max_box_doublings + 1):
        region = local if box is None else box.intersect(local)
        if region is not None:
            result = _minimize_over_region(p, focal.field, region, settings)
            if box is None or not _touches_binding_face(result.parameter, box, local):
                if attempt:
                    logger.debug("Closest point found after %d box doubling(s)", attempt)
                return result
        if box is None:
            break
        logger.warning(
            "Closest point for base %s touches the search box %s..%s; doubling",
            p.base.tolist(),
            box.lower.tolist(),
            box.upper.tolist(),
        )
        box = box.doubled()
    raise BoxTooSmall(
        f"Minimiser for base {p.base.tolist()} stays on the search box boundary after "
        f"{settings.max_box_doublings} doubling(s); enlarge the box",
        parameter=tuple(p.base.tolist()),
    )


def _touches_binding_face(t: np.ndarray, box: SearchBox, local: SearchBox) -> bool:
    width = box.upper - box.lower
    slack = BOX_FACE_TOLERANCE * np.maximum(1.0, width)
    on_lower = (t - box.lower <= slack) & (box.lower > local.lower)
    on_upper = (box.upper - t <= slack) & (box.upper < local.upper)
    return bool(np.any(on_lower | on_upper))


def _grid_local_minima(squared: np.ndarray, grid_points: int, dimension: int) -> np.ndarray:
    """Flat indices of samples no larger than any axis neighbour, in C order."""
    values = squared.reshape((grid_points,) * dimension)
    is_minimum = np.ones(values.shape, dtype=bool)
    for axis in range(dimension):
        widths = [(1, 1) if a == axis else (0, 0) for a in range(dimension)]
        padded = np.pad(values, widths, constant_values=np.inf)
        before = np.take(padded, np.arange(0, grid_points), axis=axis)
        after = np.take(padded, np.arange(2, grid_points + 2), axis=axis)
        is_minimum &= (values <= before) & (values <= after)
    return np.flatnonzero(is_minimum.ravel())


def _minimize_over_region(
    p: SpacePoint, f: ScalarField, region: SearchBox, settings: OracleSettings
) -> ClosestPointResult:
    axes = [np.linspace(lo, hi, settings.grid_points) for lo, hi in zip(region.lower, region.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    # C-order ravel of an "ij" mesh is lexicographic, so argmin breaks ties
    # towards the smallest t
    samples = np.stack([axis.ravel() for axis in mesh], axis=1)
    heights = f.values(samples)
    if not np.all(np.isfinite(heights)) or np.any(heights <= 0):
        bad = samples[int(np.argmin(np.where(np.isfinite(heights), heights, -np.inf)))]
        raise NonPositiveField(f"f is not positive and finite near t = {bad.tolist()}")
    squared = np.sum((samples - p.base) ** 2, axis=1) + (heights - p.height) ** 2
    best_index = int(np.argmin(squared))
    best_t = samples[best_index]
    best_value = float(squared[best_index])

    # a non-convex f (a min family, say) can have several basins whose grid
    # samples are ordered differently from their true minima
    minima = _grid_local_minima(squared, settings.grid_points, p.dimension)
    order = minima[np.argsort(squared[minima], kind="stable")][: settings.refine_candidates]
    cell = (region.upper - region.lower) / (settings.grid_points - 1)

    def objective(t: np.ndarray) -> float:
        t = np.atleast_1d(t)
        return float(np.sum((t - p.base) ** 2) + (f.value(t) - p.height) ** 2)

    parameter, value = best_t, best_value
    for index in order:
        start = samples[int(index)]
        lower = np.maximum(start - cell, region.lower)
        upper = np.minimum(start + cell, region.upper)
        candidate = _refine(objective, start, lower, upper, settings)
        candidate_value = objective(candidate)
        if candidate_value < value or (candidate_value == value and parameter is best_t):
            parameter, value = candidate, candidate_value
    if len(order) > 1:
        logger.debug("Refined %d grid basins for base %s", len(order), p.base.tolist())
    foot = SpacePoint(parameter, f.value(parameter))
    return ClosestPointResult(point=foot, distance=float(np.sqrt(value)), parameter=parameter.copy())


def _refine(
    objective: Callable[[np.ndarray], float],
    start: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    settings: OracleSettings,
) -> np.ndarray:
    """Bounded Brent in one dimension, bounded Powell otherwise."""
    if start.shape[0] == 1:
        refined = minimize_scalar(
            lambda s: objective(np.array([s])),
            bounds=(float(lower[0]), float(upper[0])),
            method="bounded",
            options={"xatol": settings.step_tolerance, "maxiter": settings.max_refine_iterations},
        )
        return np.array([float(refined.x)])
    refined = minimize(
        objective,
        start,
        method="Powell",
        bounds=list(zip(lower.tolist(), upper.tolist())),
        options={
            "xtol": settings.step_tolerance,
            "ftol": 1e-15,
            "maxiter": settings.max_refine_iterations,
        },
    )
    return np.asarray(refined.x, dtype=float)


@dataclass
class LipschitzReport:
    pairs_checked: int
    violations: int = 0
    max_violation: float = 0.0
    worst_pair: Optional[int] = None
    tolerance: float = DEFAULT_LIPSCHITZ_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "lipschitz",
            "passed": self.passed,
            "pairs_checked": self.pairs_checked,
            "violations": self.violations,
            "max_violation": self.max_violation,
            "worst_pair": self.worst_pair,
            "tolerance": self.tolerance,
        }


def lipschitz_check(
    focal: EpigraphFocal,
    pairs: Sequence[Tuple[SpacePoint, SpacePoint]],
    tolerance: float = DEFAULT_LIPSCHITZ_TOLERANCE,
) -> LipschitzReport:
    """|d(p2, L) - d(p1, L)| <= |p2 - p1| over every pair; report only."""
    report = LipschitzReport(pairs_checked=len(pairs), tolerance=tolerance)
    cache: Dict[Tuple[float, ...], float] = {}

    def distance(p: SpacePoint) -> float:
        key = tuple(p.as_array().tolist())
        if key not in cache:
            cache[key] = distance_to_epigraph(p, focal).distance
        return cache[key]

    for index, (first, second) in enumerate(pairs):
        separation = first.distance_to(second)
        excess = abs(distance(second) - distance(first)) - separation
        if excess > report.max_violation:
            report.max_violation = excess
            report.worst_pair = index
        if excess > tolerance * max(1.0, separation):
            report.violations += 1
    logger.debug(
        "Lipschitz check: %d pairs, %d violations, max excess %.3e",
        report.pairs_checked,
        report.violations,
        report.max_violation,
    )
    return report


def random_pairs(
    box: SearchBox, height_range: Tuple[float, float], count: int, seed: int = 0
) -> List[Tuple[SpacePoint, SpacePoint]]:
    """Uniform random point pairs over ``box`` × ``height_range``."""
    rng = np.random.default_rng(seed)
    pairs: List[Tuple[SpacePoint, SpacePoint]] = []
    for _ in range(count):
        bases = rng.uniform(box.lower, box.upper, size=(2, box.dimension))
        heights = rng.uniform(height_range[0], height_range[1], size=2)
        pairs.append((SpacePoint(bases[0], heights[0]), SpacePoint(bases[1], heights[1])))
    return pairs
