"""Tests for narrowed exception handling in the solver paths."""
from __future__ import annotations

import numpy as np
import pytest
from unittest.mock import patch

from equimid.characterization import CandidateG, characterize
from equimid.errors import (
    BoxTooSmall,
    DimensionError,
    EquimidError,
    ExpressionSyntaxError,
    NoConvergence,
    NonPositiveField,
    OracleFailure,
)
from equimid.fields import parse
from equimid.geometry import EpigraphFocal, OracleSettings, SearchBox
from equimid.parametric import NewtonSettings, damped_newton
from equimid.solver import equidistance_residual, solve_G_at


def test_value_errors_stay_value_errors():
    """Input problems can be caught as ValueError by callers that know nothing of equimid."""
    for cls in (DimensionError, ExpressionSyntaxError, NonPositiveField):
        assert issubclass(cls, ValueError)
        assert issubclass(cls, EquimidError)
    assert issubclass(NoConvergence, RuntimeError)


def test_box_too_small_becomes_oracle_failure():
    """A boxed oracle that cannot grow far enough surfaces as OracleFailure in the solver."""
    focal = EpigraphFocal(
        parse("sqrt(t1^2 + 1)", 1),
        search_box=SearchBox([-0.1], [0.1]),
        settings=OracleSettings(max_box_doublings=0),
    )
    with pytest.raises(OracleFailure) as excinfo:
        equidistance_residual(np.array([5.0]), 0.0, focal)
    assert isinstance(excinfo.value.__cause__, BoxTooSmall)
    with pytest.raises(OracleFailure):
        solve_G_at([5.0], focal.field, focal)


def test_singular_jacobian_reported_as_no_convergence():
    """LinAlgError from the Newton step is not leaked to callers."""
    with pytest.raises(NoConvergence, match="singular Jacobian"):
        damped_newton(
            lambda t: t - 1.0,
            lambda t: np.zeros((1, 1)),
            np.array([0.0]),
            NewtonSettings(),
        )


def test_bisection_cap_raises_no_convergence():
    with pytest.raises(NoConvergence) as excinfo:
        solve_G_at([0.0], parse("sqrt(t1^2 + 1)", 1), tolerance=1e-14, max_iterations=3)
    assert excinfo.value.iterations >= 3


def test_characterize_records_failed_roundtrip():
    """A Newton failure during the H roundtrip marks injectivity as failed instead of raising."""
    candidate = CandidateG(parse("0.5*sqrt(t1^2 + 1)", 1), [[-1.0], [0.0], [1.0]])
    with patch(
        "equimid.characterization.invert_h", side_effect=NoConvergence("stuck", iterations=1, residual=1.0)
    ):
        report = characterize(candidate, spot_checks=0)
    assert not report.h_injective_ok
    assert report.worst_roundtrip_error == float("inf")
    assert not report.passed
