"""Unit tests for report writers, the worker pool and logging setup."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from sweepoutlab import __version__
from sweepoutlab.exceptions import OutputError
from sweepoutlab.log_config import setup_logging
from sweepoutlab.utils import (
    ensure_dir,
    format_value,
    log_step_duration,
    parallel_map,
    render_template,
    write_csv,
    write_dat,
    write_json,
    write_run_metadata,
    write_text,
)

pytestmark = pytest.mark.unit


def _square(x: int) -> int:
    return x * x


class TestFormatting:
    @pytest.mark.parametrize(
        "value,text",
        [
            (0.1, "0.1"),
            (np.float64(1e-300), "1e-300"),
            (True, "true"),
            (np.bool_(False), "false"),
            (np.int64(7), "7"),
            (None, ""),
            ("ok", "ok"),
        ],
    )
    def test_format_value(self, value, text):
        assert format_value(value) == text

    def test_render_template(self):
        assert render_template("Hello {{ name }}!", {"name": "saddle"}) == "Hello saddle!"


class TestWriters:
    def test_json_converts_numpy(self, tmp_path):
        path = write_json(tmp_path / "a" / "r.json", {"x": np.arange(3), "y": np.float32(0.5)})
        assert json.loads(path.read_text()) == {"x": [0, 1, 2], "y": 0.5}

    def test_csv(self, tmp_path):
        path = write_csv(tmp_path / "r.csv", ("a", "b"), [(1, 0.25), (2, None)])
        assert path.read_text() == "a,b\n1,0.25\n2,\n"

    def test_dat(self, tmp_path):
        path = write_dat(
            tmp_path / "f.dat", "title", ("s", "v"), [(1e-8, math.pi)], notes=("grid_n=64",)
        )
        lines = path.read_text().splitlines()
        assert lines[0] == "# title"
        assert lines[1] == "# grid_n=64"
        assert lines[2] == "# s v"
        assert lines[3] == f"1e-08 {math.pi!r}"

    def test_text_error_becomes_output_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OutputError):
            write_text(blocker / "child.txt", "y")

    def test_ensure_dir(self, tmp_path):
        assert ensure_dir(tmp_path / "x" / "y").is_dir()

    def test_run_metadata(self, tmp_path):
        path = write_run_metadata(tmp_path, "verify width", {"seed": 1}, {"passed": True})
        data = yaml.safe_load(path.read_text())
        assert path.name == "run_metadata.yaml"
        assert data["command"] == "verify width"
        assert data["version"] == __version__
        assert data["config"] == {"seed": 1}
        assert data["passed"] is True
        assert len(data["config_digest"]) == 40


class TestParallelMap:
    def test_serial(self):
        assert parallel_map(_square, [1, 2, 3], threads=1) == [1, 4, 9]

    def test_pool_keeps_order(self):
        assert parallel_map(_square, list(range(20)), threads=2) == [x * x for x in range(20)]

    def test_empty(self):
        assert parallel_map(_square, [], threads=4) == []


class TestLogging:
    def test_setup_writes_log_file(self, tmp_path):
        log_file = setup_logging(verbose=False, out_dir=tmp_path)
        assert log_file == tmp_path / ".sweepoutlab" / "sweepoutlab.log"
        logging.getLogger("sweepoutlab.test").info("hello file")
        for handler in logging.getLogger().handlers:
            handler.flush()
        assert "hello file" in log_file.read_text()

    def test_stream_handler_quiet_unless_verbose(self, tmp_path):
        setup_logging(verbose=False, out_dir=tmp_path)
        stream = [
            h for h in logging.getLogger().handlers if type(h) is logging.StreamHandler
        ]
        assert stream[0].level == logging.WARNING
        setup_logging(verbose=True, out_dir=tmp_path)
        stream = [
            h for h in logging.getLogger().handlers if type(h) is logging.StreamHandler
        ]
        assert len(stream) == 1
        assert stream[0].level == logging.DEBUG

    def test_step_duration(self, caplog):
        with caplog.at_level(logging.INFO, logger="sweepoutlab.timer"):
            log_step_duration("mesh", 0.0)
        assert "TIMER: Step 'mesh' finished" in caplog.text

    def test_default_directory_is_cwd(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert setup_logging().parent == Path(tmp_path) / ".sweepoutlab"
