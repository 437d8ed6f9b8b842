"""Triangulated meshes of the family surfaces, clipped to a domain.

The pipeline is marching cubes on a uniform grid, Newton projection of the
vertices onto ``{p = 0}``, and an exact re-cut of the triangles that cross the
domain boundary with the new vertices pushed onto ``{p = 0} ∩ ∂domain``.
Areas come from two resolutions; topology from the Euler characteristic.

The second half of the module integrates the closed-form Jacobian of the
saddle ``z = x^2 - y^2`` over balls, which is the independent check on the
mesh areas.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import trimesh
from scipy.integrate import trapezoid
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from skimage.measure import marching_cubes

from . import family_core as fc
from .exceptions import (
    NonManifoldMesh,
    OutputError,
    PreconditionError,
    SingularLine,
    SingularityTooClose,
    handle_errors,
)
from .family_core import AnyParameter, FamilyParameter, Phi5Parameter

if TYPE_CHECKING:  # pragma: no cover
    from .variation import OmegaDomain

__all__ = [
    "DomainKind",
    "DomainSpec",
    "SurfaceMesh",
    "AreaEstimate",
    "ComponentTopology",
    "TopologyReport",
    "AreaCheckReport",
    "extract_mesh",
    "extract_meshes",
    "split_plane_pair",
    "mesh_area",
    "area",
    "estimate_area",
    "area_derivative",
    "topology",
    "export_mesh",
    "mesh_filename",
    "saddle_ball_parameter",
    "saddle_patch_area",
    "saddle_slice_area",
    "appendixA_bound_check",
]

logger = logging.getLogger("sweepoutlab.surface_mesh")

GRID_OFFSETS = (0.1234, 0.2345, 0.3456)
NEWTON_STEPS = 3
CURVE_STEPS = 6
TANGENTIAL_TOL = 1e-6
MIN_GRID = 16


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


class DomainKind(str, Enum):
    UNIT_BALL = "UnitBall"
    OMEGA = "Omega"


@dataclass(frozen=True)
class DomainSpec:
    """Closed region ``{phi <= 0}`` the surfaces are clipped to."""

    kind: DomainKind = DomainKind.UNIT_BALL
    omega: Optional["OmegaDomain"] = None

    def __post_init__(self) -> None:
        if self.kind is DomainKind.OMEGA and self.omega is None:
            raise PreconditionError("an Omega domain needs its OmegaDomain")

    @classmethod
    def unit_ball(cls) -> "DomainSpec":
        return cls(DomainKind.UNIT_BALL)

    @classmethod
    def from_omega(cls, omega: "OmegaDomain") -> "DomainSpec":
        return cls(DomainKind.OMEGA, omega)

    @property
    def extent(self) -> float:
        """Half-width of an axis-aligned box containing the domain."""
        if self.kind is DomainKind.UNIT_BALL:
            return 1.0
        return self.omega.extent

    def level(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is DomainKind.UNIT_BALL:
            return np.sum(x * x, axis=-1) - 1.0
        return self.omega.level(x)

    def level_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind is DomainKind.UNIT_BALL:
            return 2.0 * x
        return self.omega.level_gradient(x)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        """Distance to the boundary, negative inside (first order off the ball)."""
        x = np.asarray(x, dtype=float)
        if self.kind is DomainKind.UNIT_BALL:
            return np.linalg.norm(x, axis=-1) - 1.0
        g = np.linalg.norm(self.level_gradient(x), axis=-1)
        return self.level(x) / np.maximum(g, 1e-300)


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Triangulated surface with boundary; arrays are read-only after construction."""

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loops: Tuple[Tuple[int, ...], ...]
    components: Tuple[np.ndarray, ...]
    normals: np.ndarray
    boundary_vertices: np.ndarray
    grid_n: int
    transversality: float = math.inf

    @classmethod
    def empty(cls, grid_n: int) -> "SurfaceMesh":
        return cls(
            _frozen(np.zeros((0, 3))),
            _frozen(np.zeros((0, 3), dtype=np.int64)),
            (),
            (),
            _frozen(np.zeros((0, 3))),
            _frozen(np.zeros(0, dtype=np.int64)),
            grid_n,
        )

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    @property
    def tangential(self) -> bool:
        """Surface and domain boundary nearly tangent somewhere on the boundary curve."""
        return self.transversality < TANGENTIAL_TOL

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)

    def curvature_defect(self) -> float:
        """Area gap between flat triangles and the curved surface they span."""
        if self.is_empty:
            return 0.0
        v = self.vertices[self.triangles]
        cross = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        twice = np.linalg.norm(cross, axis=1)
        ok = twice > 0
        face_n = cross[ok] / twice[ok, None]
        vert_n = self.normals[self.triangles[ok]]
        cos = np.abs(np.einsum("fj,fkj->fk", face_n, vert_n)).min(axis=1)
        return float(np.sum(0.5 * twice[ok] * (1.0 - np.clip(cos, 0.0, 1.0))))


@dataclass(frozen=True)
class AreaEstimate:
    value: float
    error_bound: float
    resolutions_used: Tuple[int, ...]
    richardson: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "error_bound": self.error_bound,
            "resolutions_used": list(self.resolutions_used),
            "richardson": self.richardson,
        }


@dataclass(frozen=True)
class ComponentTopology:
    genus: int
    boundary_count: int
    euler_characteristic: int
    orientable: bool = True


@dataclass(frozen=True)
class TopologyReport:
    components: Tuple[ComponentTopology, ...]

    @property
    def total_genus(self) -> int:
        return sum(c.genus for c in self.components)

    @property
    def boundary_count(self) -> int:
        return sum(c.boundary_count for c in self.components)

    def to_dict(self) -> dict:
        return {
            "total_genus": self.total_genus,
            "components": [
                {
                    "genus": c.genus,
                    "boundary_count": c.boundary_count,
                    "euler_characteristic": c.euler_characteristic,
                    "orientable": c.orientable,
                }
                for c in self.components
            ],
        }


# ---------------------------------------------------------------------------
# Mesh extraction
# ---------------------------------------------------------------------------


def _check_singularities(param: AnyParameter, domain: DomainSpec, grid_n: int) -> None:
    family = param.to_family() if isinstance(param, Phi5Parameter) else param
    radius = 2.0 / grid_n
    try:
        candidates = fc._singular_candidates(family)
    except SingularLine as exc:
        # the line runs parallel to the rotated y2-axis
        a0, a1, a2 = family.proj.a[:3]
        foot = family.rot.matrix.T @ np.array([-a1 / (2 * a0), a2 / (2 * a0), 0.0])
        if exc.details["distance_to_origin"] - domain.extent < radius:
            raise SingularityTooClose(
                "singular line meets the domain", foot, {"point": foot.tolist()}
            ) from exc
        return
    for point in candidates:
        if float(domain.signed_distance(point)) < radius:
            raise SingularityTooClose(
                f"singular point {np.round(point, 6).tolist()} within {radius:.4g} of the domain",
                point,
                {"point": point.tolist()},
            )


def _sample_volume(
    param: AnyParameter, domain: DomainSpec, grid_n: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    h = 2.0 / grid_n
    half = domain.extent + 3.0 * h
    m = int(math.ceil(2.0 * half / h)) + 1
    origin = -half + np.array(GRID_OFFSETS) * h
    ax = [origin[k] + h * np.arange(m) for k in range(3)]
    yy, zz = np.meshgrid(ax[1], ax[2], indexing="ij")
    vol = np.empty((m, m, m))
    mask = np.empty((m, m, m), dtype=bool)
    reach = 2.0 * math.sqrt(3.0) * h
    for i, xv in enumerate(ax[0]):
        slab = np.stack([np.full_like(yy, xv), yy, zz], axis=-1)
        vol[i] = fc.eval(param, slab)
        mask[i] = domain.signed_distance(slab) < reach
    return vol, mask, origin, h


def _newton_project(param: AnyParameter, pts: np.ndarray, steps: int = NEWTON_STEPS) -> np.ndarray:
    pts = pts.copy()
    for _ in range(steps):
        val = np.atleast_1d(fc.eval(param, pts))
        g = fc.gradient(param, pts)
        g2 = np.sum(g * g, axis=1)
        ok = g2 > 1e-20
        pts[ok] -= (val[ok] / g2[ok])[:, None] * g[ok]
    return pts


def _project_to_curve(
    param: AnyParameter, domain: DomainSpec, x: np.ndarray, steps: int = CURVE_STEPS
) -> np.ndarray:
    """Gauss-Newton onto ``{p = 0, phi = 0}``; alternating projections where that is singular."""
    x = x.copy()
    for _ in range(steps):
        if len(x) == 0:
            break
        f = np.stack([np.atleast_1d(fc.eval(param, x)), domain.level(x)], axis=-1)
        jac = np.stack([fc.gradient(param, x), domain.level_gradient(x)], axis=1)
        jjt = jac @ jac.transpose(0, 2, 1)
        det = jjt[:, 0, 0] * jjt[:, 1, 1] - jjt[:, 0, 1] * jjt[:, 1, 0]
        good = det > 1e-14 * jjt[:, 0, 0] * jjt[:, 1, 1]
        if np.any(good):
            lam = np.linalg.solve(jjt[good], f[good][..., None])[..., 0]
            x[good] -= np.einsum("nij,ni->nj", jac[good], lam)
        bad = ~good
        if np.any(bad):
            for row in (1, 0):
                g = jac[bad, row]
                g2 = np.maximum(np.sum(g * g, axis=1), 1e-300)
                x[bad] -= (f[bad, row] / g2)[:, None] * g
    return x


def _dedupe(pts: np.ndarray, faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _, first, inverse = np.unique(
        np.round(pts, 10), axis=0, return_index=True, return_inverse=True
    )
    pts = pts[first]
    faces = inverse.reshape(-1)[faces]
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 0] != faces[:, 2])
    )
    return pts, faces[keep]


def _clip(
    param: AnyParameter, domain: DomainSpec, pts: np.ndarray, faces: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cut triangles along ``phi = 0``; returns points, faces and cut-vertex indices."""
    phi = domain.level(pts)
    inside = phi < 0
    count = inside[faces].sum(axis=1)
    kept = [faces[count == 3]]

    cache: Dict[Tuple[int, int], int] = {}
    edges: List[Tuple[int, int]] = []
    base = len(pts)

    def cut(i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        if key not in cache:
            cache[key] = base + len(edges)
            edges.append(key)
        return cache[key]

    extra: List[Tuple[int, int, int]] = []
    partial = (count == 1) | (count == 2)
    for tri, cnt in zip(faces[partial].tolist(), count[partial].tolist()):
        flags = [bool(inside[v]) for v in tri]
        if cnt == 1:
            k = flags.index(True)
            a, b, c = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            extra.append((a, cut(a, b), cut(a, c)))
        else:
            k = flags.index(False)
            c, a, b = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            bc, ac = cut(b, c), cut(a, c)
            extra.append((a, b, bc))
            extra.append((a, bc, ac))

    if edges:
        e = np.array(edges)
        pa, pb = pts[e[:, 0]], pts[e[:, 1]]
        fa, fb = phi[e[:, 0]], phi[e[:, 1]]
        w = (fa / (fa - fb))[:, None]
        new = _project_to_curve(param, domain, pa + w * (pb - pa))
        pts = np.vstack([pts, new])
        kept.append(np.array(extra, dtype=np.int64))
    faces = np.vstack(kept) if kept else np.zeros((0, 3), dtype=np.int64)
    cut_idx = np.arange(base, base + len(edges))

    used = np.zeros(len(pts), dtype=bool)
    used[faces.ravel()] = True
    remap = np.cumsum(used) - 1
    return pts[used], remap[faces], remap[cut_idx[used[cut_idx]]]


def _edges(faces: np.ndarray) -> np.ndarray:
    return np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])


def _boundary_loops(faces: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    directed = _edges(faces)
    undirected = np.sort(directed, axis=1)
    uniq, counts = np.unique(undirected, axis=0, return_counts=True)
    boundary = uniq[counts == 1]
    adjacency: Dict[int, List[int]] = {}
    for u, v in boundary.tolist():
        adjacency.setdefault(u, []).append(v)
        adjacency.setdefault(v, []).append(u)
    loops: List[Tuple[int, ...]] = []
    while adjacency:
        start = min(adjacency)
        loop = [start]
        cur = adjacency[start][0]
        adjacency[start].remove(cur)
        adjacency[cur].remove(start)
        while cur != start:
            loop.append(cur)
            if not adjacency[cur]:
                break
            nxt = adjacency[cur][0]
            adjacency[cur].remove(nxt)
            adjacency[nxt].remove(cur)
            cur = nxt
        for v in set(loop):
            if v in adjacency and not adjacency[v]:
                del adjacency[v]
        loops.append(tuple(loop))
    return tuple(loops)


def _triangle_components(faces: np.ndarray) -> np.ndarray:
    n_faces = len(faces)
    undirected = np.sort(_edges(faces), axis=1)
    _, edge_id = np.unique(undirected, axis=0, return_inverse=True)
    edge_id = edge_id.reshape(-1)
    n_edges = int(edge_id.max()) + 1
    tri = np.tile(np.arange(n_faces), 3)
    size = n_faces + n_edges
    graph = coo_matrix(
        (np.ones(len(tri)), (tri, n_faces + edge_id)), shape=(size, size)
    )
    _, labels = connected_components(graph, directed=False)
    _, labels = np.unique(labels[:n_faces], return_inverse=True)
    return labels.reshape(-1)


def _assemble(
    param: AnyParameter,
    domain: DomainSpec,
    pts: np.ndarray,
    faces: np.ndarray,
    cut_idx: np.ndarray,
    grid_n: int,
) -> SurfaceMesh:
    if len(faces) == 0:
        return SurfaceMesh.empty(grid_n)
    grad = fc.gradient(param, pts)
    gnorm = np.linalg.norm(grad, axis=1)
    normals = grad / np.maximum(gnorm, 1e-300)[:, None]
    transversality = math.inf
    if len(cut_idx):
        dn = domain.level_gradient(pts[cut_idx])
        sin = np.linalg.norm(np.cross(grad[cut_idx], dn), axis=1) / np.maximum(
            gnorm[cut_idx] * np.linalg.norm(dn, axis=1), 1e-300
        )
        transversality = float(sin.min())
    labels = _triangle_components(faces)
    components = tuple(
        _frozen(np.flatnonzero(labels == k)) for k in range(int(labels.max()) + 1)
    )
    return SurfaceMesh(
        _frozen(pts),
        _frozen(faces.astype(np.int64)),
        _boundary_loops(faces),
        components,
        _frozen(normals),
        _frozen(cut_idx.astype(np.int64)),
        grid_n,
        transversality,
    )


def extract_mesh(
    param: AnyParameter,
    domain: DomainSpec | None = None,
    grid_n: int = 64,
    check_singular: bool = True,
) -> SurfaceMesh:
    """Mesh of ``{p = 0}`` inside *domain* at grid spacing ``2 / grid_n``.

    Raises ``SingularityTooClose`` if a singular point of the surface is within
    ``2 / grid_n`` of the domain; *check_singular* disables that guard for
    illustration meshes.  A surface that misses the box gives an empty mesh.
    """
    domain = domain or DomainSpec.unit_ball()
    if grid_n < MIN_GRID:
        raise PreconditionError("grid_n must be at least 16", {"grid_n": grid_n})
    if check_singular:
        _check_singularities(param, domain, grid_n)

    vol, mask, origin, h = _sample_volume(param, domain, grid_n)
    if vol.min() > 0 or vol.max() < 0:
        logger.debug("no sign change on the grid, empty surface")
        return SurfaceMesh.empty(grid_n)
    try:
        verts, faces, _, _ = marching_cubes(
            vol, level=0.0, spacing=(h, h, h), mask=mask, allow_degenerate=False
        )
    except (ValueError, RuntimeError):
        logger.debug("marching cubes found no surface")
        return SurfaceMesh.empty(grid_n)
    if len(faces) == 0:
        return SurfaceMesh.empty(grid_n)

    pts = _newton_project(param, verts + origin)
    pts, faces = _dedupe(pts, faces.astype(np.int64))
    pts, faces, cut_idx = _clip(param, domain, pts, faces)
    mesh = _assemble(param, domain, pts, faces, cut_idx, grid_n)
    logger.debug(
        f"mesh grid_n={grid_n}: {len(mesh.vertices)} vertices, "
        f"{len(mesh.triangles)} triangles, {len(mesh.boundary_loops)} boundary loops"
    )
    return mesh


def split_plane_pair(param: FamilyParameter) -> Tuple[FamilyParameter, FamilyParameter]:
    """The two planes of a member whose zero set is a pair of crossing planes."""
    if not fc.is_singular_line(param):
        raise PreconditionError("parameter is not a pair of crossing planes")
    a0, a1, a2 = param.proj.a[:3]
    alpha, beta = a1 / (2.0 * a0), a2 / (2.0 * a0)
    first = FamilyParameter.from_coords((0.0, 1.0, -1.0, 0.0, alpha + beta), 0.0, param.rot)
    second = FamilyParameter.from_coords((0.0, 1.0, 1.0, 0.0, alpha - beta), 0.0, param.rot)
    return first, second


def extract_meshes(
    param: AnyParameter,
    domain: DomainSpec | None = None,
    grid_n: int = 64,
    check_singular: bool = True,
) -> List[SurfaceMesh]:
    """Like ``extract_mesh`` but meshes a crossing plane pair as its two planes."""
    if isinstance(param, FamilyParameter) and fc.is_singular_line(param):
        return [extract_mesh(p, domain, grid_n, check_singular) for p in split_plane_pair(param)]
    return [extract_mesh(param, domain, grid_n, check_singular)]


# ---------------------------------------------------------------------------
# Area
# ---------------------------------------------------------------------------

MeshLike = Union[SurfaceMesh, Sequence[SurfaceMesh]]


def _as_list(meshes: MeshLike) -> List[SurfaceMesh]:
    return [meshes] if isinstance(meshes, SurfaceMesh) else list(meshes)


def mesh_area(meshes: MeshLike) -> float:
    return float(sum(float(m.triangle_areas().sum()) for m in _as_list(meshes)))


def area(mesh_sequence: Sequence[MeshLike]) -> AreaEstimate:
    """Area from meshes of one surface at increasing resolutions.

    The value is the finest area; the bound is the difference to the previous
    resolution plus the flat-triangle curvature defect of the finest mesh.
    """
    levels = [_as_list(m) for m in mesh_sequence]
    if not levels or not levels[0]:
        raise PreconditionError("area needs at least one mesh")
    grids = tuple(lv[0].grid_n for lv in levels)
    areas = [mesh_area(lv) for lv in levels]
    fine = areas[-1]
    defect = sum(m.curvature_defect() for m in levels[-1])
    if len(areas) == 1:
        return AreaEstimate(fine, defect, grids)
    gap = abs(fine - areas[-2])
    richardson = fine + (fine - areas[-2]) / 3.0
    return AreaEstimate(fine, gap + defect, grids, richardson)


def estimate_area(
    param: AnyParameter,
    domain: DomainSpec | None = None,
    grid_n: int = 64,
    check_singular: bool = True,
) -> AreaEstimate:
    """Area of the member at ``grid_n`` and ``2 * grid_n``.

    With *check_singular* off, members with isolated singular points are
    meshed as they are; the area stays finite and converges.
    """
    return area(
        [
            extract_meshes(param, domain, grid_n, check_singular),
            extract_meshes(param, domain, 2 * grid_n, check_singular),
        ]
    )


def area_derivative(
    family: Callable[[float], AnyParameter],
    value: float,
    h: float,
    domain: DomainSpec | None = None,
    grid_n: int = 64,
) -> Tuple[float, float]:
    """Central difference of area along ``family`` at ``value``; returns ``(d, error)``."""
    lo = estimate_area(family(value - h), domain, grid_n)
    hi = estimate_area(family(value + h), domain, grid_n)
    deriv = (hi.value - lo.value) / (2.0 * h)
    return deriv, (hi.error_bound + lo.error_bound) / (2.0 * h)


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------


def topology(mesh: SurfaceMesh) -> TopologyReport:
    """Genus, boundary count and Euler characteristic of each component."""
    if mesh.is_empty:
        return TopologyReport(())
    faces = mesh.triangles
    undirected = np.sort(_edges(faces), axis=1)
    uniq, edge_id, counts = np.unique(
        undirected, axis=0, return_inverse=True, return_counts=True
    )
    edge_id = edge_id.reshape(-1)
    if np.any(counts > 2):
        bad = uniq[counts > 2][0].tolist()
        raise NonManifoldMesh(
            f"edge {bad} is shared by more than two triangles",
            {"edges": int(np.sum(counts > 2))},
        )

    labels = np.empty(len(faces), dtype=np.int64)
    for k, comp in enumerate(mesh.components):
        labels[comp] = k
    n_comp = len(mesh.components)

    vertex_label = np.full(len(mesh.vertices), -1)
    vertex_label[faces.ravel()] = np.repeat(labels, 3)
    edge_label = np.empty(len(uniq), dtype=np.int64)
    edge_label[edge_id] = np.tile(labels, 3)

    n_v = np.bincount(vertex_label[vertex_label >= 0], minlength=n_comp)
    n_e = np.bincount(edge_label, minlength=n_comp)
    n_f = np.bincount(labels, minlength=n_comp)
    n_b = np.zeros(n_comp, dtype=np.int64)
    for loop in mesh.boundary_loops:
        n_b[vertex_label[loop[0]]] += 1

    directed = _edges(faces)
    _, dir_id, dir_counts = np.unique(
        directed, axis=0, return_inverse=True, return_counts=True
    )
    twisted = dir_counts[dir_id.reshape(-1)] > 1
    bad_orientation = np.bincount(np.tile(labels, 3)[twisted], minlength=n_comp)

    out = []
    for k in range(n_comp):
        chi = int(n_v[k] - n_e[k] + n_f[k])
        twice_genus = 2 - chi - int(n_b[k])
        if twice_genus < 0 or twice_genus % 2:
            raise NonManifoldMesh(
                "Euler characteristic is inconsistent with an orientable surface",
                {"component": k, "euler_characteristic": chi, "boundary_count": int(n_b[k])},
            )
        out.append(
            ComponentTopology(
                twice_genus // 2, int(n_b[k]), chi, bool(bad_orientation[k] == 0)
            )
        )
    return TopologyReport(tuple(out))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def mesh_filename(param: FamilyParameter, grid_n: int, suffix: str = "obj") -> str:
    return f"{param.digest()}_{grid_n}.{suffix}"


@handle_errors(OutputError, logger)
def export_mesh(meshes: MeshLike, path: Path | str) -> Path:
    """Write the mesh(es) as OBJ or binary PLY, chosen by the file suffix."""
    path = Path(path)
    parts = [m for m in _as_list(meshes) if not m.is_empty]
    verts, faces, offset = [], [], 0
    for m in parts:
        verts.append(np.asarray(m.vertices))
        faces.append(np.asarray(m.triangles) + offset)
        offset += len(m.vertices)
    tm = trimesh.Trimesh(
        vertices=np.vstack(verts) if verts else np.zeros((0, 3)),
        faces=np.vstack(faces) if faces else np.zeros((0, 3), dtype=np.int64),
        process=False,
    )
    suffix = path.suffix.lower().lstrip(".")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if suffix == "ply":
            tm.export(str(path), file_type="ply", encoding="binary")
        elif suffix == "obj":
            tm.export(str(path), file_type="obj", include_normals=False)
        else:
            raise OutputError(f"unsupported mesh format: {path.suffix}", {"path": str(path)})
    except OSError as exc:
        raise OutputError(f"cannot write mesh {path}", {"error": str(exc)}) from exc
    logger.info(f"💾 Mesh written to {path}")
    return path


# ---------------------------------------------------------------------------
# Saddle patches in balls
# ---------------------------------------------------------------------------


def saddle_ball_parameter(center: Sequence[float], radius: float) -> FamilyParameter:
    """Family member whose zero set in the unit ball is ``{z = x^2 - y^2} ∩ B(center, R)`` rescaled."""
    cx, cy, cz = (float(c) for c in center)
    r = float(radius)
    coords = (r * r, 2.0 * cx * r, -2.0 * cy * r, -r, cx * cx - cy * cy - cz)
    return FamilyParameter.from_coords(coords, 0.0)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)
_BASE_CELLS = 16


def _ball_level(s: np.ndarray, t: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    x = s + t - center[0]
    y = s - t - center[1]
    z = 4.0 * s * t - center[2]
    return x * x + y * y + z * z - radius * radius


def _square_range(lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    sq_lo = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(lo * lo, hi * hi))
    return sq_lo, np.maximum(lo * lo, hi * hi)


def _level_bounds(
    s0: np.ndarray, t0: np.ndarray, w: float, center: np.ndarray, radius: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Interval enclosure of ``_ball_level`` over the cells ``[s0, s0 + w] x [t0, t0 + w]``."""
    x_lo, y_lo = s0 + t0 - center[0], s0 - t0 - w - center[1]
    corners = np.stack([s0 * t0, s0 * (t0 + w), (s0 + w) * t0, (s0 + w) * (t0 + w)])
    z_lo = 4.0 * corners.min(axis=0) - center[2]
    z_hi = 4.0 * corners.max(axis=0) - center[2]
    bounds = [
        _square_range(x_lo, x_lo + 2.0 * w),
        _square_range(y_lo, y_lo + 2.0 * w),
        _square_range(z_lo, z_hi),
    ]
    r2 = radius * radius
    return sum(b[0] for b in bounds) - r2, sum(b[1] for b in bounds) - r2


def _gauss_cells(
    s0: np.ndarray,
    t0: np.ndarray,
    w: float,
    center: np.ndarray,
    radius: float,
    indicator: bool,
) -> float:
    if len(s0) == 0:
        return 0.0
    xi = 0.5 * (_GL_NODES + 1.0)
    wt = 0.5 * _GL_WEIGHTS
    s = s0[:, None, None] + w * xi[None, :, None]
    t = t0[:, None, None] + w * xi[None, None, :]
    jac = 2.0 * np.sqrt(1.0 + 8.0 * s * s + 8.0 * t * t)
    if indicator:
        jac = jac * (_ball_level(s, t, center, radius) <= 0.0)
    return float(np.sum(jac * wt[None, :, None] * wt[None, None, :]) * w * w)


def _patch_quadrature(center: np.ndarray, radius: float, depth: int) -> float:
    sc, tc = 0.5 * (center[0] + center[1]), 0.5 * (center[0] - center[1])
    # the ball projects into the disk |(x, y) - c| <= R, i.e. |(s, t) - (sc, tc)| <= R / sqrt(2)
    half = radius / math.sqrt(2.0) * (1.0 + 1e-9)
    w = 2.0 * half / _BASE_CELLS
    idx = np.arange(_BASE_CELLS)
    s0, t0 = np.meshgrid(sc - half + w * idx, tc - half + w * idx, indexing="ij")
    s0, t0 = s0.ravel(), t0.ravel()
    total = 0.0
    for level in range(depth + 1):
        if len(s0) == 0:
            break
        lo, hi = _level_bounds(s0, t0, w, center, radius)
        inside = hi < 0.0
        straddle = ~inside & (lo <= 0.0)
        total += _gauss_cells(s0[inside], t0[inside], w, center, radius, False)
        if level == depth:
            total += _gauss_cells(s0[straddle], t0[straddle], w, center, radius, True)
            break
        s0, t0, w = s0[straddle], t0[straddle], 0.5 * w
        s0 = np.concatenate([s0, s0 + w, s0, s0 + w])
        t0 = np.concatenate([t0, t0, t0 + w, t0 + w])
    return total


def saddle_patch_area(
    center: Sequence[float], radius: float, quad_n: int = 64
) -> AreaEstimate:
    """Area of ``{z = x^2 - y^2}`` inside ``B(center, radius)``.

    Integrates ``2 sqrt(1 + 8 s^2 + 8 t^2)`` over the preimage of the ball under
    ``(s, t) -> (s + t, s - t, 4 s t)``; boundary cells are refined to depth
    ``log2(quad_n)`` below a 16x16 base grid.
    """
    if radius <= 0:
        raise PreconditionError("radius must be positive", {"radius": radius})
    if quad_n < 64:
        raise PreconditionError("quad_n must be at least 64", {"quad_n": quad_n})
    c = np.asarray(center, dtype=float)
    depth = int(round(math.log2(quad_n)))
    coarse = _patch_quadrature(c, float(radius), depth)
    fine = _patch_quadrature(c, float(radius), depth + 1)
    return AreaEstimate(fine, abs(fine - coarse), (quad_n, 2 * quad_n))


def _sheet_primitive(t: np.ndarray, a: np.ndarray) -> np.ndarray:
    # antiderivative of 2 sqrt(a + 8 t^2) in t
    return t * np.sqrt(a + 8.0 * t * t) + a / math.sqrt(8.0) * np.arcsinh(t * np.sqrt(8.0 / a))


def saddle_slice_area(
    center: Sequence[float], radius: float, n_slices: int = 200_001
) -> float:
    """Area of ``{z = x^2 - y^2}`` inside ``B(center, radius)`` by exact slices in ``t``.

    For fixed ``s`` the ball preimage is the ``t``-interval between the roots of
    a quadratic and the inner integral has a closed form; the outer integral is
    a trapezoid sum over *n_slices* values of ``s``.
    """
    if radius <= 0:
        raise PreconditionError("radius must be positive", {"radius": radius})
    cx, cy, cz = (float(c) for c in center)
    half = radius / math.sqrt(2.0)
    sc = 0.5 * (cx + cy)
    s = np.linspace(sc - half, sc + half, n_slices)
    qa = 2.0 + 16.0 * s * s
    qb = 2.0 * (cy - cx) - 8.0 * s * cz
    qc = (s - cx) ** 2 + (s - cy) ** 2 + cz * cz - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    root = np.sqrt(np.maximum(disc, 0.0))
    a = 1.0 + 8.0 * s * s
    inner = _sheet_primitive((-qb + root) / (2.0 * qa), a) - _sheet_primitive(
        (-qb - root) / (2.0 * qa), a
    )
    inner = np.where(disc > 0.0, inner, 0.0)
    return float(trapezoid(inner, s))


@dataclass
class AreaCheckReport:
    """Outcome of the ball-ratio campaign for the saddle."""

    passed: bool
    max_ratio: float
    max_ratio_error: float
    argmax: Dict[str, object]
    samples: List[Dict[str, float]] = field(default_factory=list)
    ratio_profile: List[Dict[str, float]] = field(default_factory=list)

    def pretty(self) -> str:
        verdict = "[green]PASS[/green]" if self.passed else "[red]FAIL[/red]"
        return (
            f"{verdict} max area/(2πR²) = {self.max_ratio:.6f} "
            f"± {self.max_ratio_error:.2e} at {self.argmax}"
        )

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_ratio": self.max_ratio,
            "max_ratio_error": self.max_ratio_error,
            "argmax": self.argmax,
            "ratio_profile": self.ratio_profile,
        }


def appendixA_bound_check(
    samples: int,
    R_range: Tuple[float, float] = (0.05, 20.0),
    center_range: Tuple[float, float] = (-1.0, 1.0),
    quad_n: int = 64,
    seed: int = 0,
    profile_heights: Sequence[float] = (-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0),
) -> AreaCheckReport:
    """Check ``area(M ∩ B) < 2πR^2`` on random balls.

    Radii are log-uniform in *R_range*, centers uniform in the cube
    ``center_range^3``.  A ball passes when ratio plus quadrature error stays
    below 1.  Ratios along centers ``(0, 0, z0)`` with unit radius are
    reported as a ratio profile.
    """
    if samples < 1:
        raise PreconditionError("samples must be at least 1", {"samples": samples})
    rng = np.random.default_rng(seed)
    lo, hi = math.log(R_range[0]), math.log(R_range[1])
    rows: List[Dict[str, float]] = []
    for _ in range(samples):
        radius = math.exp(rng.uniform(lo, hi))
        center = rng.uniform(center_range[0], center_range[1], size=3)
        est = saddle_patch_area(center, radius, quad_n)
        scale = 2.0 * math.pi * radius * radius
        rows.append(
            {
                "cx": float(center[0]),
                "cy": float(center[1]),
                "cz": float(center[2]),
                "R": radius,
                "area": est.value,
                "error": est.error_bound,
                "ratio": est.value / scale,
                "ratio_error": est.error_bound / scale,
            }
        )
    best = max(rows, key=lambda r: r["ratio"])
    passed = all(r["ratio"] + r["ratio_error"] < 1.0 for r in rows)
    ratio_profile = []
    for z0 in profile_heights:
        est = saddle_patch_area((0.0, 0.0, z0), 1.0, quad_n)
        ratio_profile.append({"z0": float(z0), "ratio": est.value / (2.0 * math.pi)})
    logger.info(
        f"{'✅' if passed else '❌'} saddle ball check: max ratio {best['ratio']:.6f} "
        f"over {samples} balls"
    )
    return AreaCheckReport(
        passed,
        best["ratio"],
        best["ratio_error"],
        {k: best[k] for k in ("cx", "cy", "cz", "R")},
        rows,
        ratio_profile,
    )
