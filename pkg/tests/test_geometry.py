from __future__ import annotations

import math

import numpy as np
import pytest

from equimid.errors import BoxTooSmall, NonPositiveField
from equimid.fields import parse
from equimid.geometry import (
    EpigraphFocal,
    OracleSettings,
    SearchBox,
    SpacePoint,
    distance_to_epigraph,
    distance_to_hyperplane,
    lipschitz_check,
    random_pairs,
)

X_AT_ONE = math.sqrt(6.0) - 1.0
Y_AT_ONE = math.sqrt(6.0) / (math.sqrt(2.0) + math.sqrt(3.0))


def hyperboloid(n: int = 1) -> EpigraphFocal:
    return EpigraphFocal(parse("sqrt(norm2() + 1)", n))


def test_distance_to_hyperplane():
    assert distance_to_hyperplane(SpacePoint([0.0], 0.5)) == 0.5
    assert distance_to_hyperplane(SpacePoint([3.0, 4.0], 0.0)) == 0.0
    assert distance_to_hyperplane(SpacePoint([1.0], -2.0)) == 2.0


def test_space_point_is_immutable():
    p = SpacePoint([1.0, 2.0], 3.0)
    with pytest.raises(ValueError):
        p.base[0] = 5.0
    assert p.as_array().tolist() == [1.0, 2.0, 3.0]


def test_constant_field_vertical_drop():
    result = distance_to_epigraph(SpacePoint([0.0], 0.5), EpigraphFocal(parse("2", 1)))
    assert abs(result.distance - 1.5) < 1e-12
    assert abs(result.parameter[0]) < 1e-9
    assert abs(result.point.height - 2.0) < 1e-15


def test_parametric_point_is_equidistant():
    result = distance_to_epigraph(SpacePoint([X_AT_ONE], Y_AT_ONE), hyperboloid())
    assert abs(result.distance - Y_AT_ONE) < 1e-9
    assert abs(result.parameter[0] - 1.0) < 1e-6


def test_parametric_point_is_equidistant_in_two_dimensions():
    # t = (1, 1): |t|^2 = 2, sqrt(|t|^2 + 1) = sqrt(3), sqrt(2|t|^2 + 1) = sqrt(5)
    a, b = math.sqrt(3.0), math.sqrt(5.0)
    x = np.array([1.0, 1.0]) * (1.0 + a / (a + b))
    y = a * b / (a + b)
    result = distance_to_epigraph(SpacePoint(x, y), hyperboloid(2))
    assert abs(result.distance - y) < 1e-7


def test_points_in_the_epigraph_have_zero_distance():
    focal = hyperboloid()
    assert distance_to_epigraph(SpacePoint([0.0], 5.0), focal).distance == 0.0
    assert distance_to_epigraph(SpacePoint([0.0], 1.0), focal).distance == 0.0
    assert distance_to_epigraph(SpacePoint([0.0], 0.999), focal).distance > 0.0


def test_epigraph_membership():
    focal = hyperboloid(2)
    assert focal.contains(SpacePoint([0.0, 0.0], 1.0))
    assert focal.contains(SpacePoint([3.0, 4.0], 6.0))
    assert not focal.contains(SpacePoint([3.0, 4.0], 5.0))


def test_oracle_is_minimal_on_its_own_grid():
    focal = hyperboloid()
    p = SpacePoint([0.7], 0.2)
    result = distance_to_epigraph(p, focal)
    reach = focal.field.value(p.base) - p.height
    for t in np.linspace(0.7 - reach, 0.7 + reach, 64):
        sample = math.hypot(t - 0.7, math.sqrt(t * t + 1.0) - 0.2)
        assert result.distance <= sample + 1e-15


def test_supplied_box_doubles_until_the_minimiser_is_inside():
    focal = hyperboloid()
    p = SpacePoint([5.0], 0.0)
    boxed = EpigraphFocal(focal.field, search_box=SearchBox([-0.1], [0.1]))
    # (t - 5)^2 + t^2 + 1 is smallest at t = 2.5
    expected = math.sqrt(13.5)
    assert abs(distance_to_epigraph(p, focal).distance - expected) < 1e-10
    assert abs(distance_to_epigraph(p, boxed).distance - expected) < 1e-10


def test_box_too_small_without_doublings():
    boxed = EpigraphFocal(
        parse("sqrt(t1^2 + 1)", 1),
        search_box=SearchBox([-0.1], [0.1]),
        settings=OracleSettings(max_box_doublings=0),
    )
    with pytest.raises(BoxTooSmall) as excinfo:
        distance_to_epigraph(SpacePoint([5.0], 0.0), boxed)
    assert excinfo.value.parameter == (5.0,)


def test_non_positive_field_is_rejected():
    with pytest.raises(NonPositiveField):
        distance_to_epigraph(SpacePoint([-1.0], 0.0), EpigraphFocal(parse("t1", 1)))
    with pytest.raises(NonPositiveField):
        distance_to_epigraph(SpacePoint([5.0], 0.0), EpigraphFocal(parse("t1^2 - 1", 1)))


def test_search_box_validation():
    with pytest.raises(ValueError):
        SearchBox([1.0], [1.0])
    with pytest.raises(ValueError):
        OracleSettings(grid_points=1)
    box = SearchBox([-1.0, 0.0], [1.0, 2.0])
    assert box.doubled().lower.tolist() == [-2.0, -1.0]
    assert box.intersect(SearchBox([5.0, 5.0], [6.0, 6.0])) is None


def test_lipschitz_identical_and_collinear_pairs():
    focal = EpigraphFocal(parse("2", 1))
    same = SpacePoint([0.3], 0.4)
    report = lipschitz_check(focal, [(same, same), (SpacePoint([0.0], 0.0), SpacePoint([0.0], 1.0))])
    assert report.passed
    assert report.pairs_checked == 2
    assert report.max_violation <= 1e-12


def test_lipschitz_random_pairs_under_hyperboloid():
    pairs = random_pairs(SearchBox([-4.0], [4.0]), (0.0, 4.0), 1000, seed=1)
    report = lipschitz_check(hyperboloid(), pairs, tolerance=1e-9)
    assert report.passed, report.to_mapping()
    assert report.to_mapping()["violations"] == 0
