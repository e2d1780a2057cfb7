"""Closed-form equidistant function of the hyperboloid f(t) = sqrt(|t|^2 + 1).

x(t) and t point the same way, and |t| solves the depressed cubic

    t^3 - ((s^2 - 3) / 2) t - s = 0,    s = |x|.

Its discriminant s^2/4 - (s^2 - 3)^3/216 is non-negative exactly for
|s| <= X2, where Cardano's formula gives the single real root; beyond X2
the trigonometric form picks the root with the sign of s.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from .fields import DerivativeMode, ExpressionField, ScalarField, as_vector, parse

logger = logging.getLogger("equimid.hyperboloid")

X2 = float(np.sqrt(3.0) * np.sqrt(np.cbrt(4.0) + np.cbrt(2.0) + 1.0))
X1 = -X2
HYPERBOLOID_SOURCE = "sqrt(norm2() + 1)"
DISCRIMINANT_BOUNDARY_TOLERANCE = 1e-9


def cubic_residual(t: float, s: float) -> float:
    return t**3 - 0.5 * (s * s - 3.0) * t - s


def discriminant(s: float) -> float:
    return s * s / 4.0 - (s * s - 3.0) ** 3 / 216.0


def cardano_root(s: float) -> float:
    """Real root for x1 <= s <= x2; the discriminant is clamped at 0 for rounding."""
    root = np.sqrt(max(discriminant(s), 0.0))
    return float(np.cbrt(s / 2.0 + root) + np.cbrt(s / 2.0 - root))


def trigonometric_root(s: float) -> float:
    """Root with the sign of s for |s| >= x2.

    Everything is scaled by powers of |s| so the root stays finite for any finite s;
    once s*s overflows the angle settles at its limit pi/6.
    """
    if s * s == 0.0:
        return 0.0
    size = abs(s)
    inverse_square = 1.0 / (size * size)
    ratio = max(1.0 - 3.0 * inverse_square, 0.0)
    scaled_radicand = max(ratio * ratio * ratio / 54.0 - inverse_square * inverse_square, 0.0)
    angle = np.arctan(size * size * np.sqrt(scaled_radicand)) / 3.0
    return float(np.sign(s) * 2.0 * size * np.sqrt(ratio / 6.0) * np.cos(angle))


def x_inverse_1d(s: float) -> float:
    s = float(s)
    if X1 <= s <= X2:
        return cardano_root(s)
    return trigonometric_root(s)


def x_inverse_nd(s: object) -> np.ndarray:
    """Radial reduction: |t| = x_inverse_1d(|s|), t parallel to s."""
    point = as_vector(s)
    radius = float(np.linalg.norm(point))
    if radius == 0.0:
        return np.zeros_like(point)
    return x_inverse_1d(radius) * point / radius


def hyperboloid_x(t: object) -> np.ndarray:
    point = as_vector(t)
    r2 = float(point @ point)
    a, b = np.sqrt(r2 + 1.0), np.sqrt(2.0 * r2 + 1.0)
    return point + point * a / (a + b)


def hyperboloid_y(t: object) -> float:
    point = as_vector(t)
    r2 = float(point @ point)
    a, b = np.sqrt(r2 + 1.0), np.sqrt(2.0 * r2 + 1.0)
    return float(a * b / (a + b))


def golden_G(s: object) -> float:
    return hyperboloid_y(x_inverse_nd(s))


def golden_gradient(s: object) -> np.ndarray:
    """∇G(x(t)) = t / (sqrt(|t|^2 + 1) + sqrt(2|t|^2 + 1))."""
    t = x_inverse_nd(s)
    r2 = float(t @ t)
    return t / (np.sqrt(r2 + 1.0) + np.sqrt(2.0 * r2 + 1.0))


def hyperboloid_field(dimension: int) -> ExpressionField:
    return parse(HYPERBOLOID_SOURCE, dimension)


class HyperboloidEquidistantField(ScalarField):
    """The closed-form G as a field, so it can be characterized like any candidate."""

    gradient_mode = DerivativeMode.EXACT
    hessian_mode = DerivativeMode.FINITE_DIFFERENCE

    def _value(self, t: np.ndarray) -> float:
        return golden_G(t)

    def _exact_gradient(self, t: np.ndarray) -> np.ndarray:
        return golden_gradient(t)

    def describe(self) -> str:
        return f"closed-form hyperboloid G (n={self.dimension})"


@dataclass
class CardanoIntervalReport:
    samples_checked: int
    mismatches: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "check": "cardano_interval",
            "passed": self.passed,
            "samples_checked": self.samples_checked,
            "mismatches": self.mismatches,
            "x1": X1,
            "x2": X2,
        }


def cardano_interval_check(samples: Sequence[float]) -> CardanoIntervalReport:
    """Discriminant >= 0 exactly on [x1, x2]; samples within 1e-9 of ±x2 are skipped."""
    report = CardanoIntervalReport(samples_checked=0)
    for s in samples:
        s = float(s)
        if abs(abs(s) - X2) <= DISCRIMINANT_BOUNDARY_TOLERANCE:
            continue
        report.samples_checked += 1
        if (discriminant(s) >= 0.0) != (X1 <= s <= X2):
            report.mismatches.append(s)
    if report.mismatches:
        logger.warning("Cardano interval mismatch at %d sample(s)", len(report.mismatches))
    return report
