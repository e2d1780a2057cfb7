"""Recognise equidistant functions and recover the f that generates them.

A smooth convex positive G is the equidistant function of K and epi f for
some f exactly when |∇G| < 1, the map

    H(x) = x - 2 G ∇G / (1 + |∇G|^2)

is injective, and Y = 2 ∇G / (1 - |∇G|^2) is monotone along H. The
generating function is then f(H(x)) = G + sqrt(G^2 - |x - H(x)|^2).
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EquimidError, GradientBoundViolated, GradientUnavailable, NegativeRadicand, NoConvergence
from .fields import DerivativeMode, ScalarField, as_vector
from .geometry import EpigraphFocal, OracleSettings
from .parametric import NewtonSettings, damped_newton
from .solver import solve_G_at

logger = logging.getLogger("equimid.characterization")

DEFAULT_IMAGE_SEPARATION = 1e-9
DEFAULT_ROUNDTRIP_TOLERANCE = 1e-8
DEFAULT_MIN_JACOBIAN_DETERMINANT = 1e-8
DEFAULT_MONOTONE_TOLERANCE = 1e-12
DEFAULT_CROSS_CHECK_TOLERANCE = 1e-7
DEFAULT_SPOT_CHECKS = 2
CROSS_CHECK_GRID_POINTS = 16


@dataclass
class CandidateG:
    field: ScalarField
    samples: List[np.ndarray]

    def __post_init__(self) -> None:
        self.samples = [as_vector(s, self.field.dimension) for s in self.samples]

    @property
    def dimension(self) -> int:
        return self.field.dimension


CandidateLike = Union[CandidateG, ScalarField]


def _as_field(G: CandidateLike) -> ScalarField:
    return G.field if isinstance(G, CandidateG) else G


def _gradient(G: ScalarField, x: np.ndarray) -> np.ndarray:
    if not G.differentiable:
        raise GradientUnavailable(f"{G.describe()} has no gradient")
    return G.gradient(x)


def h_map(x: object, G: CandidateLike) -> np.ndarray:
    candidate = _as_field(G)
    point = as_vector(x, candidate.dimension)
    gradient = _gradient(candidate, point)
    return point - 2.0 * candidate.value(point) * gradient / (1.0 + gradient @ gradient)


def y_field(x: object, G: CandidateLike) -> np.ndarray:
    candidate = _as_field(G)
    point = as_vector(x, candidate.dimension)
    gradient = _gradient(candidate, point)
    squared = float(gradient @ gradient)
    if squared >= 1.0:
        raise GradientBoundViolated(f"|∇G({point.tolist()})| = {np.sqrt(squared):.6g} >= 1")
    return 2.0 * gradient / (1.0 - squared)


def h_jacobian(x: object, G: CandidateLike) -> np.ndarray:
    """DH assembled column by column from ∂_i ∇G."""
    candidate = _as_field(G)
    point = as_vector(x, candidate.dimension)
    value = candidate.value(point)
    gradient = _gradient(candidate, point)
    scale = 1.0 + float(gradient @ gradient)
    basis = np.eye(candidate.dimension)
    columns = []
    for i in range(candidate.dimension):
        curvature = candidate.hess_vec(point, basis[i])
        column = (
            basis[i]
            - 2.0 * (gradient[i] * gradient + value * curvature) / scale
            + 4.0 * value * float(gradient @ curvature) * gradient / scale**2
        )
        columns.append(column)
    return np.column_stack(columns)


def invert_h(
    t: object, G: CandidateLike, initial: Optional[object] = None, settings: Optional[NewtonSettings] = None
) -> np.ndarray:
    candidate = _as_field(G)
    goal = as_vector(t, candidate.dimension)
    start = goal if initial is None else as_vector(initial, candidate.dimension)
    return damped_newton(
        lambda x: h_map(x, candidate) - goal,
        lambda x: h_jacobian(x, candidate),
        start,
        settings or NewtonSettings(),
        label=f"H-inversion at {goal.tolist()}",
    )


def reconstruct_at(x: np.ndarray, G: ScalarField) -> Tuple[np.ndarray, float]:
    """(t, f(t)) with t = H(x)."""
    image = h_map(x, G)
    height = G.value(x)
    offset = x - image
    radicand = height * height - float(offset @ offset)
    if radicand < 0:
        raise NegativeRadicand(f"G^2 < |x - H(x)|^2 at x = {x.tolist()}")
    return image, height + float(np.sqrt(radicand))


class ReconstructedField(ScalarField):
    """The generating f of a characterized G; every query inverts H afresh."""

    gradient_mode = DerivativeMode.EXACT
    hessian_mode = DerivativeMode.FINITE_DIFFERENCE

    def __init__(self, G: ScalarField, newton: Optional[NewtonSettings] = None):
        super().__init__(G.dimension)
        self.G = G
        self.newton = newton or NewtonSettings()

    def _value(self, t: np.ndarray) -> float:
        x = invert_h(t, self.G, settings=self.newton)
        return reconstruct_at(x, self.G)[1]

    def _exact_gradient(self, t: np.ndarray) -> np.ndarray:
        return y_field(invert_h(t, self.G, settings=self.newton), self.G)

    def describe(self) -> str:
        return f"f reconstructed from {self.G.describe()}"


@dataclass
class CharacterizationReport:
    samples_checked: int
    positive_ok: bool = True
    grad_bound_ok: bool = True
    worst_gradient_norm: float = 0.0
    h_injective_ok: bool = True
    min_image_separation: float = float("inf")
    worst_roundtrip_error: float = 0.0
    min_abs_jacobian_det: float = float("inf")
    y_monotone_ok: bool = True
    worst_monotone_inner: float = float("inf")
    worst_monotone_pair: Optional[Tuple[int, int]] = None
    reconstructed_f: Optional[List[Tuple[List[float], float]]] = None
    reconstructed_field: Optional[ReconstructedField] = None
    cross_check_error: Optional[float] = None
    cross_check_ok: Optional[bool] = None
    messages: List[str] = field(default_factory=list)

    @property
    def conditions_ok(self) -> bool:
        return self.positive_ok and self.grad_bound_ok and self.h_injective_ok and self.y_monotone_ok

    @property
    def passed(self) -> bool:
        return self.conditions_ok and self.cross_check_ok is not False

    def to_mapping(self) -> Dict[str, Any]:
        table = None
        if self.reconstructed_f is not None:
            table = [{"t": t, "f": value} for t, value in self.reconstructed_f]
        return {
            "check": "characterization",
            "passed": self.passed,
            "samples_checked": self.samples_checked,
            "positive_ok": self.positive_ok,
            "grad_bound_ok": self.grad_bound_ok,
            "worst_gradient_norm": self.worst_gradient_norm,
            "h_injective_ok": self.h_injective_ok,
            "min_image_separation": self.min_image_separation,
            "worst_roundtrip_error": self.worst_roundtrip_error,
            "min_abs_jacobian_det": self.min_abs_jacobian_det,
            "y_monotone_ok": self.y_monotone_ok,
            "worst_monotone_inner": self.worst_monotone_inner,
            "worst_monotone_pair": list(self.worst_monotone_pair) if self.worst_monotone_pair else None,
            "cross_check_ok": self.cross_check_ok,
            "cross_check_error": self.cross_check_error,
            "reconstructed_f": table,
            "messages": self.messages,
        }


def characterize(
    candidate: CandidateG,
    spot_checks: int = DEFAULT_SPOT_CHECKS,
    cross_check_tolerance: float = DEFAULT_CROSS_CHECK_TOLERANCE,
    newton: Optional[NewtonSettings] = None,
) -> CharacterizationReport:
    """Test the three conditions on the sample grid and reconstruct f if they hold.

    The recovered f comes back twice: sampled in `reconstructed_f` and as the
    evaluator `reconstructed_field`.

    Injectivity of H is evidence, not proof: distinct images, Newton
    roundtrips H^-1(H(x)) = x and a Jacobian determinant bounded away
    from zero at every sample.
    """
    G = candidate.field
    settings = newton or NewtonSettings()
    samples = candidate.samples
    report = CharacterizationReport(samples_checked=len(samples))
    if not G.differentiable:
        raise GradientUnavailable(f"{G.describe()} has no gradient; characterization needs one")

    gradients = []
    for x in samples:
        if not G.value(x) > 0:
            report.positive_ok = False
            report.messages.append(f"G is not positive at {x.tolist()}")
        gradient = G.gradient(x)
        gradients.append(gradient)
        size = float(np.linalg.norm(gradient))
        report.worst_gradient_norm = max(report.worst_gradient_norm, size)
        if not size < 1.0:
            report.grad_bound_ok = False
    if not report.grad_bound_ok:
        report.messages.append(f"|∇G| reaches {report.worst_gradient_norm:.6g} >= 1")

    images = [h_map(x, G) for x in samples]
    for a, b in itertools.combinations(images, 2):
        report.min_image_separation = min(report.min_image_separation, float(np.linalg.norm(a - b)))
    if report.min_image_separation <= DEFAULT_IMAGE_SEPARATION:
        report.h_injective_ok = False
        report.messages.append("Two samples share an H image")
    for x, image in zip(samples, images):
        determinant = abs(float(np.linalg.det(h_jacobian(x, G))))
        report.min_abs_jacobian_det = min(report.min_abs_jacobian_det, determinant)
        try:
            recovered = invert_h(image, G, settings=settings)
            error = float(np.linalg.norm(recovered - x))
        except NoConvergence as exc:
            logger.info("H roundtrip failed at %s: %s", x.tolist(), exc)
            error = float("inf")
        report.worst_roundtrip_error = max(report.worst_roundtrip_error, error)
    if report.worst_roundtrip_error > DEFAULT_ROUNDTRIP_TOLERANCE:
        report.h_injective_ok = False
        report.messages.append(f"H roundtrip error {report.worst_roundtrip_error:.3e}")
    if report.min_abs_jacobian_det < DEFAULT_MIN_JACOBIAN_DETERMINANT:
        report.h_injective_ok = False
        report.messages.append(f"|det DH| drops to {report.min_abs_jacobian_det:.3e}")

    potentials: List[Optional[np.ndarray]] = []
    for gradient in gradients:
        squared = float(gradient @ gradient)
        potentials.append(2.0 * gradient / (1.0 - squared) if squared < 1.0 else None)
    for (i, first), (j, second) in itertools.combinations(enumerate(potentials), 2):
        if first is None or second is None:
            continue
        inner = float((first - second) @ (images[i] - images[j]))
        if inner < report.worst_monotone_inner:
            report.worst_monotone_inner = inner
            report.worst_monotone_pair = (i, j)
    if report.worst_monotone_inner < -DEFAULT_MONOTONE_TOLERANCE:
        report.y_monotone_ok = False
        report.messages.append(f"<Y(a) - Y(b), H(a) - H(b)> reaches {report.worst_monotone_inner:.3e}")
    if not report.grad_bound_ok:
        report.y_monotone_ok = report.y_monotone_ok and all(p is not None for p in potentials)

    if not report.conditions_ok:
        logger.info("Characterization failed: %s", "; ".join(report.messages))
        return report

    report.reconstructed_field = ReconstructedField(G, settings)
    report.reconstructed_f = []
    for x in samples:
        t, value = reconstruct_at(x, G)
        report.reconstructed_f.append((t.tolist(), value))
    _cross_check(report, candidate, spot_checks, cross_check_tolerance)
    return report


def _cross_check(
    report: CharacterizationReport,
    candidate: CandidateG,
    spot_checks: int,
    tolerance: float,
) -> None:
    """Bisection on the reconstructed f must give back G at a few samples."""
    reconstructed = report.reconstructed_field
    if spot_checks <= 0 or not candidate.samples or reconstructed is None:
        return
    focal = EpigraphFocal(reconstructed, settings=OracleSettings(grid_points=CROSS_CHECK_GRID_POINTS))
    picks = np.unique(np.linspace(0, len(candidate.samples) - 1, spot_checks + 2).round().astype(int)[1:-1])
    worst = 0.0
    for index in picks:
        x = candidate.samples[int(index)]
        try:
            solved = solve_G_at(x, reconstructed, focal, tolerance=tolerance / 10.0)
        except EquimidError as exc:
            logger.warning("Cross-check bisection failed at %s: %s", x.tolist(), exc)
            report.cross_check_ok = False
            report.messages.append(f"Cross-check failed at {x.tolist()}: {exc}")
            return
        worst = max(worst, abs(solved - candidate.field.value(x)))
    report.cross_check_error = worst
    report.cross_check_ok = worst <= tolerance
    if not report.cross_check_ok:
        report.messages.append(f"Bisection on reconstructed f differs from G by {worst:.3e}")
