"""sweepoutlab - numerical checks for a saddle-surface sweepout of the unit ball"""

from __future__ import annotations

__version__ = "0.1.0"

from .family_core import FamilyParameter, Phi5Parameter  # noqa: E402
from .surface_mesh import DomainSpec, SurfaceMesh  # noqa: E402
from .variation import OmegaDomain  # noqa: E402

__all__: list[str] = [
    "FamilyParameter",
    "Phi5Parameter",
    "DomainSpec",
    "SurfaceMesh",
    "OmegaDomain",
]
