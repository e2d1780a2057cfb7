from __future__ import annotations

import argparse
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger("equimid.config")

DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_TOLERANCE = 1e-10
DEFAULT_OUTPUT_FORMAT = "csv"
DEFAULT_RANGE = "-4:4:101"
VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
VALID_FORMATS = ("csv", "json")
VALID_MODES = ("bisect", "parametric", "golden")


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment."""

    threads: int
    log_level: str = DEFAULT_LOG_LEVEL

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "Settings":
        raw_threads = mapping.get("EQUIMID_THREADS", "").strip()
        if raw_threads:
            try:
                threads = int(raw_threads)
            except ValueError as exc:
                raise ValueError(f"Invalid integer in EQUIMID_THREADS: {raw_threads}") from exc
        else:
            threads = default_threads()
        if threads <= 0:
            raise ValueError("EQUIMID_THREADS must be > 0")

        log_level = mapping.get("EQUIMID_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper() or DEFAULT_LOG_LEVEL
        if log_level not in VALID_LOG_LEVELS:
            raise ValueError(f"EQUIMID_LOG_LEVEL must be one of {', '.join(VALID_LOG_LEVELS)}")

        return cls(threads=threads, log_level=log_level)

    @classmethod
    def from_env(cls) -> "Settings":
        return cls.from_mapping(os.environ)


@dataclass(frozen=True)
class RangeSpec:
    """One sampling axis, written MIN:MAX:COUNT on the command line."""

    minimum: float
    maximum: float
    count: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.minimum) and math.isfinite(self.maximum)):
            raise ValueError("Range bounds must be finite")
        if self.count < 2:
            raise ValueError(f"Range count must be >= 2, got {self.count}")
        if self.maximum <= self.minimum:
            raise ValueError(f"Range maximum must exceed minimum: {self.minimum}:{self.maximum}")

    @classmethod
    def parse(cls, text: str) -> "RangeSpec":
        parts = text.replace("−", "-").split(":")
        if len(parts) != 3:
            raise ValueError(f"Invalid range {text!r}; expected MIN:MAX:COUNT")
        try:
            minimum, maximum = float(parts[0]), float(parts[1])
            count = int(parts[2])
        except ValueError as exc:
            raise ValueError(f"Invalid range {text!r}; expected MIN:MAX:COUNT") from exc
        return cls(minimum, maximum, count)

    def points(self) -> np.ndarray:
        return np.linspace(self.minimum, self.maximum, self.count)

    def __str__(self) -> str:
        return f"{self.minimum:g}:{self.maximum:g}:{self.count}"


def sample_grid(ranges: Sequence[RangeSpec]) -> np.ndarray:
    """Tensor grid over the axes, rows in lexicographic order."""
    axes = [spec.points() for spec in ranges]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([axis.ravel() for axis in mesh], axis=1)


def parse_vector(text: str) -> np.ndarray:
    """Comma-separated reals, e.g. ``1,0``."""
    cleaned = text.replace("−", "-")
    try:
        values = [float(part) for part in cleaned.split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"Invalid vector {text!r}") from exc
    if not values:
        raise ValueError("Empty vector")
    return np.array(values, dtype=float)


def parse_vector_list(text: str) -> List[np.ndarray]:
    """Vectors separated by ';', e.g. ``1,0;0,1``."""
    return [parse_vector(chunk) for chunk in text.split(";") if chunk.strip()]


@dataclass(frozen=True)
class RunConfig:
    command: str
    dimension: int
    expressions: Tuple[str, ...] = ()
    ranges: Tuple[RangeSpec, ...] = ()
    tolerance: float = DEFAULT_TOLERANCE
    mode: str = "bisect"
    output_path: Optional[Path] = None
    output_format: str = DEFAULT_OUTPUT_FORMAT
    threads: int = field(default_factory=default_threads)

    @classmethod
    def from_args(cls, args: argparse.Namespace, settings: Settings) -> "RunConfig":
        dimension = int(getattr(args, "n", 1) or 1)
        if dimension < 1:
            raise ValueError("--n must be >= 1")

        raw_ranges = list(getattr(args, "range", None) or [])
        if not raw_ranges:
            raw_ranges = [DEFAULT_RANGE]
        ranges = [RangeSpec.parse(text) for text in raw_ranges]
        if len(ranges) == 1 and dimension > 1:
            ranges = ranges * dimension
        if len(ranges) != dimension:
            raise ValueError(f"Got {len(ranges)} --range values for dimension {dimension}")

        raw_tolerance = getattr(args, "tol", None)
        tolerance = DEFAULT_TOLERANCE if raw_tolerance is None else float(raw_tolerance)
        if not tolerance > 0:
            raise ValueError("--tol must be > 0")

        mode = getattr(args, "mode", None) or "bisect"
        if mode not in VALID_MODES:
            raise ValueError(f"--mode must be one of {', '.join(VALID_MODES)}")

        output_format = getattr(args, "format", None) or DEFAULT_OUTPUT_FORMAT
        if output_format not in VALID_FORMATS:
            raise ValueError(f"--format must be one of {', '.join(VALID_FORMATS)}")

        out = getattr(args, "out", None)
        return cls(
            command=str(getattr(args, "command", "") or ""),
            dimension=dimension,
            expressions=tuple(getattr(args, "f", None) or ()),
            ranges=tuple(ranges),
            tolerance=tolerance,
            mode=mode,
            output_path=Path(out) if out else None,
            output_format=output_format,
            threads=settings.threads,
        )

    def grid(self) -> np.ndarray:
        return sample_grid(self.ranges)


def configure_logging(log_level: str, log_file: Optional[Path] = None) -> None:
    root_logger = logging.getLogger()
    root_logger.handlers.clear()
    root_logger.setLevel(getattr(logging, log_level.upper(), logging.WARNING))

    formatter = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")

    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    for handler in handlers:
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)
