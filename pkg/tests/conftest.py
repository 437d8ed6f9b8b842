"""Pytest configuration and reusable fixtures for sweepoutlab tests."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# ---------------------------------------------------------------------------
# Test path setup: make sure `src/` is importable when tests are invoked from
# the project root (e.g. on CI) or inside an isolated filesystem.
# ---------------------------------------------------------------------------
PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"

if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from sweepoutlab.config import CampaignConfig  # noqa: E402
from sweepoutlab.family_core import FamilyParameter, Phi5Parameter  # noqa: E402


# ---------------------------------------------------------------------------
# Generic fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(autouse=True)
def _reset_logging():
    """Drop handlers installed by ``setup_logging`` between tests."""
    yield
    root = logging.getLogger()
    for handler in root.handlers[:]:
        if type(handler) in (logging.StreamHandler, logging.FileHandler):
            root.removeHandler(handler)
            handler.close()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# Family members
# ---------------------------------------------------------------------------


@pytest.fixture()
def apex() -> FamilyParameter:
    """``[1:0:0:0:0]``: the pair of orthogonal unit disks."""
    return FamilyParameter.from_coords((1.0, 0.0, 0.0, 0.0, 0.0))


@pytest.fixture()
def equatorial_disk() -> FamilyParameter:
    return FamilyParameter.from_coords((0.0, 0.0, 0.0, 1.0, 0.0))


@pytest.fixture()
def three_root_member() -> Phi5Parameter:
    """``x^2 - y^2 + s (z^3 - 0.6 z + 0.1)``, whose profile has three simple roots."""
    return Phi5Parameter.from_raw(0.0, 0.0, -0.6, 0.1, 1.0, 0.3)


@pytest.fixture()
def admissible() -> Phi5Parameter:
    """A smooth member close to the apex with its Omega scale ``t``."""
    direction = np.array([0.6, 0.1, 1.0])
    direction /= np.linalg.norm(direction)
    return Phi5Parameter(0.002, -0.001, *direction, s=5e-6, t=1e-5)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@pytest.fixture()
def small_config(tmp_path: Path) -> CampaignConfig:
    """A config small enough for a CLI round trip in a few seconds."""
    return CampaignConfig(
        seed=7,
        samples={
            "global_max": 4,
            "width": 4,
            "genus": 4,
            "appendix_a": 5,
            "appendix_a_mesh": 2,
            "equivariance": 10,
            "phi1": 4,
        },
        grid={"mesh": 24, "loop": 64},
        output_dir=str(tmp_path / "out"),
        threads=1,
    )
