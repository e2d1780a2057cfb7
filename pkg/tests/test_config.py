from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np
import pytest

from equimid.config import (
    DEFAULT_LOG_LEVEL,
    DEFAULT_TOLERANCE,
    RangeSpec,
    RunConfig,
    Settings,
    configure_logging,
    default_threads,
    parse_vector,
    parse_vector_list,
    sample_grid,
)


def test_settings_defaults_from_env():
    settings = Settings.from_mapping({})
    assert settings.threads == default_threads()
    assert settings.log_level == DEFAULT_LOG_LEVEL


def test_settings_custom_values_parsed():
    settings = Settings.from_mapping({"EQUIMID_THREADS": "3", "EQUIMID_LOG_LEVEL": "debug"})
    assert settings.threads == 3
    assert settings.log_level == "DEBUG"


def test_settings_invalid_values_raise():
    with pytest.raises(ValueError, match="Invalid integer in EQUIMID_THREADS"):
        Settings.from_mapping({"EQUIMID_THREADS": "many"})
    with pytest.raises(ValueError, match="must be > 0"):
        Settings.from_mapping({"EQUIMID_THREADS": "0"})
    with pytest.raises(ValueError):
        Settings.from_mapping({"EQUIMID_LOG_LEVEL": "LOUD"})


def test_range_spec_parse():
    spec = RangeSpec.parse("−2:3:6")
    assert (spec.minimum, spec.maximum, spec.count) == (-2.0, 3.0, 6)
    assert spec.points().tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
    assert str(spec) == "-2:3:6"


@pytest.mark.parametrize("text", ["1:2", "a:2:3", "2:1:5", "0:1:1", "0:inf:3"])
def test_range_spec_rejects(text):
    with pytest.raises(ValueError):
        RangeSpec.parse(text)


def test_sample_grid_is_lexicographic():
    grid = sample_grid([RangeSpec(0.0, 1.0, 2), RangeSpec(5.0, 6.0, 2)])
    assert grid.tolist() == [[0.0, 5.0], [0.0, 6.0], [1.0, 5.0], [1.0, 6.0]]


def test_parse_vectors():
    assert parse_vector("1, −0.5").tolist() == [1.0, -0.5]
    assert [v.tolist() for v in parse_vector_list("1,0;0,1")] == [[1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(ValueError):
        parse_vector("1,x")
    with pytest.raises(ValueError):
        parse_vector(" , ")


class TestRunConfig:
    settings = Settings(threads=2)

    def test_single_range_is_replicated(self):
        args = argparse.Namespace(command="sample", n=2, range=["-1:1:3"], f=["2"], out="out.csv")
        config = RunConfig.from_args(args, self.settings)
        assert config.ranges == (RangeSpec(-1.0, 1.0, 3),) * 2
        assert config.grid().shape == (9, 2)
        assert config.output_path == Path("out.csv")
        assert config.tolerance == DEFAULT_TOLERANCE
        assert config.threads == 2
        assert config.expressions == ("2",)

    def test_range_count_mismatch(self):
        args = argparse.Namespace(n=3, range=["0:1:2", "0:1:2"])
        with pytest.raises(ValueError, match="--range"):
            RunConfig.from_args(args, self.settings)

    def test_bad_tolerance_mode_and_format(self):
        for overrides in ({"tol": -1.0}, {"mode": "guess"}, {"format": "xml"}):
            args = argparse.Namespace(n=1, **overrides)
            with pytest.raises(ValueError):
                RunConfig.from_args(args, self.settings)

    def test_defaults(self):
        config = RunConfig.from_args(argparse.Namespace(), self.settings)
        assert config.dimension == 1
        assert config.mode == "bisect"
        assert config.output_format == "csv"
        assert config.output_path is None
        assert np.isclose(config.grid()[0, 0], -4.0)


def test_configure_logging_replaces_handlers(tmp_path):
    log_file = tmp_path / "logs" / "equimid.log"
    configure_logging("info", log_file)
    root = logging.getLogger()
    try:
        assert root.level == logging.INFO
        assert len(root.handlers) == 2
        logging.getLogger("equimid.test").info("hello")
        for handler in root.handlers:
            handler.flush()
        assert "INFO equimid.test: hello" in log_file.read_text(encoding="utf-8")
    finally:
        for handler in list(root.handlers):
            handler.close()
        root.handlers.clear()
