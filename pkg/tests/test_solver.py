from __future__ import annotations

import math

import numpy as np
import pytest

from equimid.errors import DimensionError, EmptyFamily, NonPositiveField
from equimid.fields import MinField, parse
from equimid.geometry import EpigraphFocal
from equimid.hyperboloid import golden_G
from equimid.solver import (
    STATUS_FAIL,
    STATUS_PASS,
    STATUS_PRECONDITION_UNMET,
    EquidistantFunction,
    continuity_probe,
    convexity_check,
    min_compose,
    monotonicity_check,
    random_triples,
    side_of_midset,
    solve_G_at,
)

HYPERBOLOID = "sqrt(t1^2 + 1)"
X_AT_ONE = math.sqrt(6.0) - 1.0
Y_AT_ONE = math.sqrt(6.0) / (math.sqrt(2.0) + math.sqrt(3.0))


def test_constant_field_gives_half_height():
    assert abs(solve_G_at([0.0], parse("2", 1)) - 1.0) < 1e-9
    assert abs(solve_G_at([3.0, -1.0], parse("2", 2)) - 1.0) < 1e-9


def test_hyperboloid_values():
    f = parse(HYPERBOLOID, 1)
    assert abs(solve_G_at([0.0], f) - 0.5) < 1e-9
    assert abs(solve_G_at([X_AT_ONE], f) - Y_AT_ONE) < 1e-8


def test_sandwich_between_zero_and_field():
    f = parse(HYPERBOLOID, 1)
    for x in np.linspace(-4.0, 4.0, 9):
        value = solve_G_at([x], f)
        assert 0.0 < value < f.value([x])


def test_any_straddling_bracket_finds_same_root():
    f = parse(HYPERBOLOID, 1)
    default = solve_G_at([0.0], f)
    narrowed = solve_G_at([0.0], f, bracket=(0.4, 0.6))
    assert abs(default - narrowed) < 2e-10


def test_bracket_without_sign_change_is_rejected():
    f = parse(HYPERBOLOID, 1)
    with pytest.raises(ValueError):
        solve_G_at([0.0], f, bracket=(0.6, 0.9))
    with pytest.raises(ValueError):
        solve_G_at([0.0], f, bracket=(0.5, 0.2))


def test_non_positive_field_is_rejected():
    with pytest.raises(NonPositiveField):
        solve_G_at([-2.0], parse("t1", 1))


def test_focal_dimension_must_match():
    with pytest.raises(DimensionError):
        solve_G_at([0.0], parse("2", 1), focal=EpigraphFocal(parse("2", 2)))


def test_side_of_midset():
    focal = EpigraphFocal(parse(HYPERBOLOID, 1))
    assert side_of_midset([0.0], 0.8, focal) == 1
    assert side_of_midset([0.0], 0.2, focal) == -1


@pytest.mark.parametrize("source, dimension", [(HYPERBOLOID, 1), ("sqrt(norm2() + 1)", 2), ("exp(t1/3) + 0.5", 1)])
def test_distance_signs_just_off_the_midset(source, dimension):
    f = parse(source, dimension)
    focal = EpigraphFocal(f)
    epsilon = 1e-5
    for x in np.random.default_rng(3).uniform(-6.0, 6.0, size=(12, dimension)):
        G = solve_G_at(x, f, focal)
        assert side_of_midset(x, G + epsilon, focal) == 1
        assert side_of_midset(x, G - epsilon, focal) == -1


def test_min_compose_needs_members():
    with pytest.raises(EmptyFamily):
        min_compose([], [0.0])


def test_min_compose_of_constants():
    family = [EquidistantFunction.by_bisection(parse(c, 1)) for c in ("2", "3", "1.5")]
    assert abs(min_compose(family, [0.7]) - 0.75) < 1e-9


def test_min_compose_matches_bisection_on_min_field():
    sources = [HYPERBOLOID, "sqrt((t1 - 3)^2 + 1)"]
    members = [parse(source, 1) for source in sources]
    family = [EquidistantFunction.by_bisection(member) for member in members]
    combined = EquidistantFunction.by_bisection(MinField(members))
    for x in np.random.default_rng(2).uniform(-5.0, 8.0, 20):
        assert abs(combined([x]) - min_compose(family, [x])) < 1e-7
    for x in np.linspace(-5.0, 8.0, 50):
        assert abs(combined([x]) - min_compose(family, [x])) < 1e-7


class TestMonotonicity:
    def test_larger_field_gives_larger_G(self):
        report = monotonicity_check(
            parse(HYPERBOLOID, 1), parse(HYPERBOLOID + " + 1", 1), [[x] for x in (-2.0, 0.0, 1.5, 3.0)]
        )
        assert report.status == STATUS_PASS
        assert report.worst_margin > 0.0
        assert report.to_mapping()["passed"] is True

    def test_constant_fields_compare_by_order(self):
        report = monotonicity_check(parse("3", 1), parse("4", 1), [[0.0]])
        assert report.status == STATUS_PASS
        swapped = monotonicity_check(parse("4", 1), parse("3", 1), [[0.0]])
        assert swapped.status == STATUS_PRECONDITION_UNMET

    def test_precondition_unmet_is_not_a_failure(self):
        report = monotonicity_check(parse("2", 1), parse(HYPERBOLOID, 1), [[5.0], [0.0]])
        assert report.status == STATUS_PRECONDITION_UNMET
        assert report.status != STATUS_FAIL
        assert report.worst_sample == [0.0]


def test_convexity_of_hyperboloid_G():
    report = convexity_check(golden_G, random_triples(-5.0, 5.0, 1, 200, seed=4))
    assert report.passed, report.to_mapping()


def test_convexity_detects_concave_function():
    report = convexity_check(lambda x: -float(x @ x), [([-1.0], [1.0], 0.5)])
    assert not report.passed
    assert report.max_violation == pytest.approx(1.0)


def test_convexity_rejects_bad_weight():
    with pytest.raises(ValueError):
        convexity_check(golden_G, [([0.0], [1.0], 1.5)])


def test_continuity_probe_reports_small_slope():
    report = continuity_probe(golden_G, [0.0], 2.0)
    assert report.passed
    assert report.spacing == pytest.approx(0.04)
    assert report.slope_estimate < 1.0


def test_continuity_probe_flags_jump():
    report = continuity_probe(lambda x: 1.0 if x[0] > 0.01 else 0.0, [0.0], 1.0, count=11)
    assert report.max_jump == 1.0
    assert report.to_mapping()["advisory"] is True
