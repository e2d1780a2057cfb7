from __future__ import annotations

import json

import numpy as np
import pytest

from equimid.presentation import Table, map_ordered, render_csv, render_json, render_report, report_json


def strict_loads(text):
    def reject(token):
        raise ValueError(f"non-standard JSON token {token}")

    return json.loads(text, parse_constant=reject)


def test_map_ordered_keeps_input_order():
    items = list(range(20))
    assert map_ordered(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert map_ordered(str, [], threads=4) == []


def test_table_validates_shape():
    with pytest.raises(ValueError):
        Table(["a", "b"], [np.zeros(2)])
    with pytest.raises(ValueError):
        Table(["a", "b"], [np.zeros(2), np.zeros(3)])


def test_csv_keeps_full_precision():
    text = render_csv(Table(["x", "G"], [np.array([0.1]), np.array([1.0 / 3.0])]))
    header, row = text.splitlines()
    assert header == "x,G"
    assert float(row.split(",")[1]) == 1.0 / 3.0


def test_non_finite_values_become_null():
    report = {
        "check": "monotonicity",
        "passed": False,
        "worst_margin": float("inf"),
        "spread": np.float64("nan"),
        "margins": [1.0, float("-inf")],
    }
    payload = strict_loads(report_json(report))
    assert payload["worst_margin"] is None
    assert payload["spread"] is None
    assert payload["margins"] == [1.0, None]
    table = strict_loads(render_json(Table(["G"], [np.array([0.5, np.inf])])))
    assert table["data"]["G"] == [0.5, None]


def test_render_report_summarizes_table():
    text = render_report({"check": "characterization", "passed": True, "reconstructed_f": [([0.0], 2.0)]})
    assert text.splitlines()[0] == "characterization: PASS"
    assert "reconstructed_f: 1 sample(s)" in text
