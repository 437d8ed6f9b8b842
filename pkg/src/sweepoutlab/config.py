"""Campaign configuration: TOML in, TOML out.

A config file may set any subset of the fields of ``CampaignConfig``; the
rest keep their defaults.  ``samples`` and ``grid`` are tables whose keys are
merged over the defaults one by one.
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import psutil
import tomli_w
from dotenv import dotenv_values

from .exceptions import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["CampaignConfig", "DEFAULT_SAMPLES", "DEFAULT_GRID", "THREADS_ENV", "resolve_threads"]

logger = logging.getLogger("sweepoutlab.config")

THREADS_ENV = "SWEEPOUTLAB_THREADS"

DEFAULT_SAMPLES: Dict[str, int] = {
    "global_max": 10_000,
    "width": 10_000,
    "genus": 1000,
    "appendix_a": 100,
    "appendix_a_mesh": 20,
    "local_max": 20,
    "lemma43": 4,
    "first_variation": 10,
    "equivariance": 1000,
    "phi1": 32,
}

DEFAULT_GRID: Dict[str, int] = {
    "mesh": 64,
    "sheet": 64,
    "quad": 64,
    "cubic": 200,
    "loop": 256,
}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass
class CampaignConfig:
    """Everything a campaign run depends on besides the code itself."""

    seed: int = 20240917
    eps1: float = 1e-2
    eps2: float = 1e-4
    c_double_prime: float = 10.0
    a5_list: List[float] = field(default_factory=lambda: [0.01])
    samples: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SAMPLES))
    grid: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_GRID))
    t_list: List[float] = field(default_factory=lambda: [1e-6, 3e-6, 1e-5, 3e-5])
    lemma_t: float = 3e-5
    s_min: float = 1e-8
    s_count: int = 10
    eps0: float = 0.05
    local_max_direction: List[float] = field(default_factory=lambda: [0.6, 0.1, 1.0])
    output_dir: str = "sweepoutlab-out"
    threads: Optional[int] = None

    def __post_init__(self) -> None:
        self._validate()

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def _validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer", {"seed": self.seed})
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits", {"seed": self.seed})
        for name in ("eps1", "eps2", "c_double_prime", "lemma_t", "s_min", "eps0"):
            value = getattr(self, name)
            if not _is_number(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive number", {name: value})
        for name in ("a5_list", "t_list", "local_max_direction"):
            values = getattr(self, name)
            if not isinstance(values, list) or not all(_is_number(v) for v in values):
                raise ConfigError(f"{name} must be a list of numbers", {name: values})
        if len(self.local_max_direction) != 3:
            raise ConfigError("local_max_direction needs three components")
        if not isinstance(self.s_count, int) or self.s_count < 2:
            raise ConfigError("s_count must be an integer >= 2", {"s_count": self.s_count})
        if not isinstance(self.output_dir, str):
            raise ConfigError("output_dir must be a string", {"output_dir": self.output_dir})
        if self.threads is not None and (
            not isinstance(self.threads, int) or isinstance(self.threads, bool) or self.threads < 1
        ):
            raise ConfigError("threads must be a positive integer", {"threads": self.threads})
        self.samples = self._merge_table("samples", self.samples, DEFAULT_SAMPLES)
        self.grid = self._merge_table("grid", self.grid, DEFAULT_GRID)

    @staticmethod
    def _merge_table(name: str, table: Any, defaults: Mapping[str, int]) -> Dict[str, int]:
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table", {name: table})
        unknown = sorted(set(table) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown keys in [{name}]: {', '.join(unknown)}", {"keys": unknown})
        merged = dict(defaults)
        for key, value in table.items():
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name}.{key} must be a positive integer", {key: value})
            merged[key] = value
        return merged

    # ------------------------------------------------------------------
    # (De)serialization
    # ------------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", {"keys": unknown})
        kwargs = dict(data)
        for name in ("eps1", "eps2", "c_double_prime", "lemma_t", "s_min", "eps0"):
            if isinstance(kwargs.get(name), int) and not isinstance(kwargs[name], bool):
                kwargs[name] = float(kwargs[name])
        for name in ("a5_list", "t_list", "local_max_direction"):
            if isinstance(kwargs.get(name), list):
                kwargs[name] = [
                    float(v) if isinstance(v, int) and not isinstance(v, bool) else v
                    for v in kwargs[name]
                ]
        return cls(**kwargs)

    @classmethod
    def from_toml(cls, path: Path | str) -> "CampaignConfig":
        path = Path(path)
        try:
            with open(path, "rb") as fp:
                data = tomllib.load(fp)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}", {"path": str(path)}) from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}", {"path": str(path)}) from exc
        logger.debug(f"loaded config from {path}")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if data["threads"] is None:
            del data["threads"]
        return data

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def write(self, path: Path | str) -> Path:
        path = Path(path)
        path.write_text(self.to_toml(), encoding="utf-8")
        return path


def resolve_threads(
    flag: Optional[int] = None,
    config: Optional[CampaignConfig] = None,
    env_file: Path | str = ".env",
) -> int:
    """Worker count: ``--threads`` > ``SWEEPOUTLAB_THREADS`` > config > physical cores."""
    if flag is not None:
        if flag < 1:
            raise ConfigError("--threads must be at least 1", {"threads": flag})
        return flag
    env_values = dotenv_values(env_file) if Path(env_file).exists() else {}
    raw = os.environ.get(THREADS_ENV, env_values.get(THREADS_ENV))
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer", {THREADS_ENV: raw}) from exc
        if value < 1:
            raise ConfigError(f"{THREADS_ENV} must be at least 1", {THREADS_ENV: raw})
        return value
    if config is not None and config.threads is not None:
        return config.threads
    return psutil.cpu_count(logical=False) or 1
