"""Unit tests for campaign configuration and worker-count resolution."""

from __future__ import annotations

import pytest

from sweepoutlab.config import (
    DEFAULT_GRID,
    DEFAULT_SAMPLES,
    THREADS_ENV,
    CampaignConfig,
    resolve_threads,
)
from sweepoutlab.exceptions import ConfigError

pytestmark = pytest.mark.unit


class TestDefaults:
    def test_defaults(self):
        config = CampaignConfig()
        assert config.seed == 20240917
        assert config.samples == DEFAULT_SAMPLES
        assert config.grid == DEFAULT_GRID
        assert config.samples["global_max"] == 10_000
        assert config.grid["cubic"] == 200

    def test_tables_merge_over_defaults(self):
        config = CampaignConfig(samples={"genus": 5})
        assert config.samples["genus"] == 5
        assert config.samples["width"] == DEFAULT_SAMPLES["width"]


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"seed": -1},
            {"seed": 1.5},
            {"seed": True},
            {"eps1": 0.0},
            {"eps2": "small"},
            {"a5_list": [0.01, "x"]},
            {"t_list": 1e-6},
            {"local_max_direction": [1.0, 0.0]},
            {"s_count": 1},
            {"threads": 0},
            {"samples": {"unknown": 3}},
            {"samples": {"genus": 0}},
            {"grid": []},
            {"output_dir": 3},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            CampaignConfig(**kwargs)


class TestToml:
    def test_round_trip(self, tmp_path):
        config = CampaignConfig(seed=11, a5_list=[0.01, 0.02], samples={"width": 8})
        path = config.write(tmp_path / "campaign.toml")
        loaded = CampaignConfig.from_toml(path)
        assert loaded == config

    def test_integers_become_floats(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("eps1 = 1\na5_list = [0, 0.01]\n")
        config = CampaignConfig.from_toml(path)
        assert config.eps1 == 1.0
        assert isinstance(config.a5_list[0], float)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("seeds = 3\n")
        with pytest.raises(ConfigError, match="seeds"):
            CampaignConfig.from_toml(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            CampaignConfig.from_toml(tmp_path / "nope.toml")

    def test_parse_error(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("seed = = 3\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            CampaignConfig.from_toml(path)

    def test_threads_left_out_when_unset(self):
        assert "threads" not in CampaignConfig().to_dict()
        assert CampaignConfig(threads=2).to_dict()["threads"] == 2


class TestThreads:
    @pytest.fixture(autouse=True)
    def _clean_env(self, monkeypatch, tmp_path):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        monkeypatch.chdir(tmp_path)

    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_threads(5, CampaignConfig(threads=2)) == 5

    def test_environment_beats_config(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_threads(None, CampaignConfig(threads=2)) == 3

    def test_dotenv_file(self, tmp_path):
        env = tmp_path / ".env"
        env.write_text(f"{THREADS_ENV}=4\n")
        assert resolve_threads(None, None, env) == 4

    def test_config_value(self):
        assert resolve_threads(None, CampaignConfig(threads=2)) == 2

    def test_physical_cores(self, monkeypatch):
        monkeypatch.setattr("sweepoutlab.config.psutil.cpu_count", lambda logical=False: 6)
        assert resolve_threads() == 6

    def test_cpu_count_unknown(self, monkeypatch):
        monkeypatch.setattr("sweepoutlab.config.psutil.cpu_count", lambda logical=False: None)
        assert resolve_threads() == 1

    @pytest.mark.parametrize("raw", ["many", "0"])
    def test_bad_environment(self, monkeypatch, raw):
        monkeypatch.setenv(THREADS_ENV, raw)
        with pytest.raises(ConfigError):
            resolve_threads()

    def test_bad_flag(self):
        with pytest.raises(ConfigError):
            resolve_threads(0)
