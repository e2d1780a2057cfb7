from __future__ import annotations

import math

import numpy as np
import pytest

from equimid.fields import parse
from equimid.hyperboloid import (
    X1,
    X2,
    cardano_interval_check,
    cardano_root,
    cubic_residual,
    discriminant,
    golden_G,
    golden_gradient,
    hyperboloid_field,
    hyperboloid_x,
    hyperboloid_y,
    trigonometric_root,
    x_inverse_1d,
    x_inverse_nd,
)
from equimid.parametric import EquidistantParameterization
from equimid.solver import solve_G_at

X_AT_ONE = math.sqrt(6.0) - 1.0
Y_AT_ONE = math.sqrt(6.0) / (math.sqrt(2.0) + math.sqrt(3.0))


def test_breakpoint_value():
    assert X2 == pytest.approx(3.397346, abs=1e-6)
    assert X1 == -X2
    assert abs(discriminant(X2)) < 1e-12


def test_inverse_examples():
    assert x_inverse_1d(0.0) == 0.0
    assert abs(x_inverse_1d(X_AT_ONE) - 1.0) < 1e-9
    assert abs(x_inverse_1d(-X_AT_ONE) + 1.0) < 1e-9


def test_branches_agree_at_breakpoint():
    for s in (X1, X2):
        assert abs(cardano_root(s) - trigonometric_root(s)) < 1e-9
    assert abs(x_inverse_1d(X2 - 1e-9) - x_inverse_1d(X2 + 1e-9)) < 1e-8


def test_cubic_residual_on_random_arguments():
    for s in np.random.default_rng(31).uniform(-10.0, 10.0, 1000):
        t = x_inverse_1d(s)
        assert abs(cubic_residual(t, s)) <= 1e-8 * (1.0 + abs(s) ** 3)
        assert np.sign(t) == np.sign(s)


@pytest.mark.parametrize("s", [1e30, 1e52, -1e52, 1e160, 1e300])
def test_inverse_stays_finite_for_huge_arguments(s):
    t = x_inverse_1d(s)
    assert math.isfinite(t)
    assert t / s == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-12)


def test_huge_arguments_solve_the_cubic():
    s = 1e52
    t = x_inverse_1d(s)
    assert abs(cubic_residual(t, s)) <= 1e-8 * (1.0 + s**3)
    assert x_inverse_nd([s, 0.0])[0] == pytest.approx(t, rel=1e-13)
    assert golden_G([s]) == pytest.approx(hyperboloid_y([t]), rel=1e-13)


def test_inverse_undoes_forward_map():
    for t in np.linspace(-6.0, 6.0, 49):
        assert abs(x_inverse_1d(hyperboloid_x([t])[0]) - t) < 1e-9


def test_radial_inverse():
    assert x_inverse_nd([0.0, 0.0]).tolist() == [0.0, 0.0]
    assert np.allclose(x_inverse_nd([X_AT_ONE, 0.0]), [1.0, 0.0], rtol=0.0, atol=1e-9)
    direction = np.array([3.0, -4.0]) / 5.0
    on_breakpoint = x_inverse_nd(X2 * direction)
    assert abs(np.linalg.norm(on_breakpoint) - cardano_root(X2)) < 1e-9
    assert x_inverse_nd([X_AT_ONE]).shape == (1,)


def test_golden_values():
    assert golden_G([0.0]) == 0.5
    assert abs(golden_G([X_AT_ONE]) - Y_AT_ONE) < 1e-12
    assert abs(golden_G([X_AT_ONE, 0.0]) - Y_AT_ONE) < 1e-12
    assert abs(hyperboloid_y([1.0]) - Y_AT_ONE) < 1e-15


def test_radial_symmetry():
    for radius in (0.3, 2.0, X2, 7.5):
        for angle in np.linspace(0.0, 2.0 * math.pi, 5):
            s = radius * np.array([math.cos(angle), math.sin(angle)])
            assert abs(golden_G(s) - golden_G([radius])) < 1e-12


def test_golden_gradient_matches_parametric_formula():
    parameterization = EquidistantParameterization(hyperboloid_field(2))
    for t in np.random.default_rng(37).uniform(-3.0, 3.0, size=(10, 2)):
        s = hyperboloid_x(t)
        assert np.allclose(golden_gradient(s), parameterization.gradient_of_G(t), rtol=0.0, atol=1e-9)


def test_numerical_solvers_agree_with_closed_form():
    f = parse("sqrt(t1^2 + 1)", 1)
    parameterization = EquidistantParameterization(f)
    bisection_error = parametric_error = 0.0
    for s in np.linspace(-8.0, 8.0, 201):
        exact = golden_G([s])
        parametric_error = max(parametric_error, abs(parameterization.eval_G([s]) - exact))
        bisection_error = max(bisection_error, abs(solve_G_at([s], f) - exact))
    assert parametric_error <= 1e-8
    assert bisection_error <= 1e-7


def test_cardano_interval_check():
    report = cardano_interval_check(np.linspace(-10.0, 10.0, 2001))
    assert report.passed
    assert 1990 <= report.samples_checked <= 2001
    mapping = report.to_mapping()
    assert mapping["x2"] == X2
    skipped = cardano_interval_check([X2, -X2])
    assert skipped.samples_checked == 0
