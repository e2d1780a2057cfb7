from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, List, Mapping, Optional, Sequence, TextIO, TypeVar

import numpy as np

logger = logging.getLogger("equimid.presentation")

T = TypeVar("T")
R = TypeVar("R")

FLOAT_FORMAT = ".17g"
MAX_LIST_PREVIEW = 8


def map_ordered(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """``fn`` over ``items`` on up to ``threads`` workers; results keep input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(fn, items))


@dataclass
class Table:
    header: List[str]
    columns: List[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.header) != len(self.columns):
            raise ValueError(f"{len(self.header)} header names for {len(self.columns)} columns")
        lengths = {len(column) for column in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"Columns have different lengths: {sorted(lengths)}")
        self.columns = [np.asarray(column, dtype=float) for column in self.columns]

    @property
    def row_count(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.header.index(name)]

    def rows(self) -> Iterable[List[float]]:
        for i in range(self.row_count):
            yield [float(column[i]) for column in self.columns]


def format_float(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def render_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows():
        writer.writerow([format_float(value) for value in row])
    return buffer.getvalue()


def render_json(table: Table) -> str:
    payload = {
        "columns": table.header,
        "rows": table.row_count,
        "data": {
            name: [_jsonable(float(v)) for v in column] for name, column in zip(table.header, table.columns)
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_table(table: Table, output_format: str, path: Optional[Path] = None, stream: Optional[TextIO] = None) -> None:
    rendered = render_csv(table) if output_format == "csv" else render_json(table)
    if path is None:
        if stream is None:
            raise ValueError("Either a path or a stream is required")
        stream.write(rendered)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rendered, encoding="utf-8")
    logger.info("Wrote %d row(s) to %s", table.row_count, path)


def _render_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        if len(value) > MAX_LIST_PREVIEW:
            head = ", ".join(_render_value(item) for item in value[:MAX_LIST_PREVIEW])
            return f"[{head}, ... ({len(value)} items)]"
        return "[" + ", ".join(_render_value(item) for item in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_render_value(v)}" for k, v in value.items()) + "}"
    return str(value)


def render_report(report: Mapping[str, Any]) -> str:
    """Human-readable summary of a check report mapping."""
    name = str(report.get("check", "report"))
    if report.get("status") is not None:
        verdict = str(report["status"]).upper()
    else:
        verdict = "PASS" if report.get("passed") else "FAIL"
    lines = [f"{name}: {verdict}"]
    for key, value in report.items():
        if key in ("check", "passed", "status") or key == "reconstructed_f":
            continue
        lines.append(f"  {key}: {_render_value(value)}")
    table = report.get("reconstructed_f")
    if table:
        lines.append(f"  reconstructed_f: {len(table)} sample(s)")
    return "\n".join(lines)


def report_json(report: Mapping[str, Any]) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        # JSON has no inf or nan
        return None
    return value
