"""Unit tests for marching-cubes meshing, areas, topology and mesh export."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from sweepoutlab import family_core as fc
from sweepoutlab import surface_mesh as sm
from sweepoutlab.exceptions import OutputError, PreconditionError, SingularityTooClose
from sweepoutlab.family_core import D2_ELEMENTS, FamilyParameter, Rotation3

pytestmark = pytest.mark.unit


class TestDomain:
    def test_unit_ball_level(self):
        dom = sm.DomainSpec.unit_ball()
        assert dom.level(np.zeros(3)) == pytest.approx(-1.0)
        assert dom.signed_distance(np.array([0.0, 0.0, 2.0])) == pytest.approx(1.0)
        assert dom.extent == 1.0

    def test_omega_kind_needs_omega(self):
        with pytest.raises(PreconditionError):
            sm.DomainSpec(sm.DomainKind.OMEGA)


class TestExtraction:
    def test_grid_too_coarse(self, equatorial_disk):
        with pytest.raises(PreconditionError):
            sm.extract_mesh(equatorial_disk, grid_n=8)

    def test_equatorial_disk_area(self, equatorial_disk):
        est = sm.estimate_area(equatorial_disk, None, 32)
        assert est.value == pytest.approx(math.pi, rel=2e-2)
        assert est.resolutions_used == (32, 64)

    def test_plane_outside_ball_is_empty(self):
        param = FamilyParameter.from_coords((0.0, 0.0, 0.0, 1.0, -2.0))
        mesh = sm.extract_mesh(param, grid_n=16)
        assert mesh.is_empty
        assert sm.mesh_area(mesh) == 0.0

    def test_plane_pair_is_split(self, apex):
        meshes = sm.extract_meshes(apex, None, 32)
        assert len(meshes) == 2
        assert sm.mesh_area(meshes) == pytest.approx(2.0 * math.pi, rel=2e-2)

    def test_singular_point_inside_is_rejected(self, apex):
        with pytest.raises(SingularityTooClose) as info:
            sm.extract_mesh(replace(apex, a5=0.5), grid_n=16)
        assert np.allclose(info.value.point, 0.0)

    def test_singular_guard_can_be_disabled(self, apex):
        mesh = sm.extract_mesh(replace(apex, a5=0.5), grid_n=16, check_singular=False)
        assert not mesh.is_empty

    def test_vertices_lie_on_surface(self, equatorial_disk):
        mesh = sm.extract_mesh(equatorial_disk, grid_n=16)
        assert np.max(np.abs(mesh.vertices[:, 2])) < 1e-10
        assert np.all(np.linalg.norm(mesh.vertices, axis=1) <= 1.0 + 1e-6)


def _smooth_member(rng: np.random.Generator) -> FamilyParameter:
    """Random member with ``a0, a3, a5 > 0``, which has no singular points."""
    a = rng.normal(size=5)
    a[0], a[3] = abs(a[0]) + 0.2, abs(a[3]) + 0.2
    a[4] *= 0.2
    rot = Rotation3.from_quaternion(*rng.normal(size=4))
    return FamilyParameter.from_coords(a, float(rng.uniform(0.2, 1.0)), rot)


def _agree(lhs: sm.AreaEstimate, rhs: sm.AreaEstimate) -> bool:
    slack = lhs.error_bound + rhs.error_bound + 2e-2 * max(lhs.value, rhs.value)
    return abs(lhs.value - rhs.value) <= slack


class TestArea:
    def test_area_needs_meshes(self):
        with pytest.raises(PreconditionError):
            sm.area([])

    def test_single_resolution_has_no_richardson(self, equatorial_disk):
        est = sm.area([sm.extract_mesh(equatorial_disk, grid_n=16)])
        assert est.richardson is None
        assert est.to_dict()["resolutions_used"] == [16]

    @pytest.mark.parametrize("seed", range(3))
    def test_area_is_d2_invariant(self, seed):
        param = _smooth_member(np.random.default_rng(seed))
        base = sm.estimate_area(param, None, 24)
        for g in D2_ELEMENTS:
            assert _agree(sm.estimate_area(fc.d2_act(g, param), None, 24), base)

    @pytest.mark.parametrize("seed", range(3))
    def test_area_is_rotation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        param = _smooth_member(rng)
        turn = Rotation3.from_quaternion(*rng.normal(size=4))
        # the unit ball is rotation invariant, so only the member needs turning
        turned = replace(param, rot=Rotation3.from_matrix(param.rot.matrix @ turn.matrix))
        assert _agree(sm.estimate_area(turned, None, 24), sm.estimate_area(param, None, 24))

    def test_refinement_stays_within_bound(self, equatorial_disk):
        coarse = sm.estimate_area(equatorial_disk, None, 16)
        fine = sm.estimate_area(equatorial_disk, None, 32)
        assert abs(coarse.value - fine.value) <= coarse.error_bound

    @pytest.mark.slow
    def test_refinement_of_curved_member(self):
        param = _smooth_member(np.random.default_rng(7))
        coarse = sm.estimate_area(param, None, 24)
        fine = sm.estimate_area(param, None, 48)
        assert abs(coarse.value - fine.value) <= coarse.error_bound


class TestTopology:
    def test_disk_is_genus_zero(self, equatorial_disk):
        report = sm.topology(sm.extract_mesh(equatorial_disk, grid_n=32))
        assert report.total_genus == 0
        assert report.boundary_count == 1
        assert report.components[0].euler_characteristic == 1
        assert report.components[0].orientable

    def test_empty_mesh(self):
        assert sm.topology(sm.SurfaceMesh.empty(16)).components == ()

    @pytest.mark.slow
    def test_three_root_profile_has_a_handle(self, three_root_member):
        report = sm.topology(sm.extract_mesh(three_root_member, grid_n=64))
        assert report.total_genus == 1


class TestExport:
    def test_filename_uses_digest(self, equatorial_disk):
        name = sm.mesh_filename(equatorial_disk, 64)
        assert name == f"{equatorial_disk.digest()}_64.obj"

    @pytest.mark.parametrize("suffix", ["obj", "ply"])
    def test_export_writes_file(self, tmp_path, equatorial_disk, suffix):
        mesh = sm.extract_mesh(equatorial_disk, grid_n=16)
        path = sm.export_mesh(mesh, tmp_path / "nested" / f"disk.{suffix}")
        assert path.exists()
        assert path.stat().st_size > 0

    def test_unknown_format(self, tmp_path, equatorial_disk):
        mesh = sm.extract_mesh(equatorial_disk, grid_n=16)
        with pytest.raises(OutputError):
            sm.export_mesh(mesh, tmp_path / "disk.stl")


class TestSaddlePatches:
    def test_small_ball_is_nearly_flat(self):
        est = sm.saddle_patch_area((0.0, 0.0, 0.0), 0.05, quad_n=64)
        assert est.value / (2.0 * math.pi * 0.05**2) == pytest.approx(0.5, rel=1e-2)

    def test_quadrature_resolution_floor(self):
        with pytest.raises(PreconditionError):
            sm.saddle_patch_area((0.0, 0.0, 0.0), 1.0, quad_n=32)

    def test_negative_radius(self):
        with pytest.raises(PreconditionError):
            sm.saddle_patch_area((0.0, 0.0, 0.0), -1.0)

    def test_ball_parameter_contains_saddle_point(self):
        # the ball center (0, 0, 0) lies on the saddle, so the origin is on the surface
        param = sm.saddle_ball_parameter((0.0, 0.0, 0.0), 2.0)
        assert fc.eval(param, (0.0, 0.0, 0.0)) == pytest.approx(0.0)

    def test_slice_area_matches_brute_force_at_large_radius(self):
        # dense-grid reference for the ball of radius 20 about (0.3, -0.7, 0.9)
        area = sm.saddle_slice_area((0.3, -0.7, 0.9), 20.0)
        assert area == pytest.approx(2229.65, rel=1e-4)

    def test_slice_area_flat_limit(self):
        assert sm.saddle_slice_area((0.0, 0.0, 0.0), 0.01) == pytest.approx(
            math.pi * 0.01**2, rel=1e-3
        )

    def test_slice_area_negative_radius(self):
        with pytest.raises(PreconditionError):
            sm.saddle_slice_area((0.0, 0.0, 0.0), -1.0)

    def test_slice_area_of_ball_missing_the_saddle(self):
        assert sm.saddle_slice_area((0.0, 0.0, 5.0), 1.0) == 0.0

    @pytest.mark.parametrize(
        "center,radius",
        [((0.1, 0.2, 0.05), 0.5), ((-0.4, 0.3, 0.2), 1.0), ((0.3, -0.7, 0.9), 2.0)],
    )
    def test_patch_matches_slices(self, center, radius):
        est = sm.saddle_patch_area(center, radius)
        ref = sm.saddle_slice_area(center, radius)
        assert abs(est.value - ref) <= est.error_bound + 1e-4 * ref

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "center,radius", [((0.3, -0.7, 0.9), 10.0), ((0.3, -0.7, 0.9), 20.0)]
    )
    def test_patch_matches_slices_for_large_balls(self, center, radius):
        # the ball preimage has long thin arms at these radii
        est = sm.saddle_patch_area(center, radius)
        ref = sm.saddle_slice_area(center, radius)
        assert abs(est.value - ref) <= est.error_bound + 1e-4 * ref
        if radius == 20.0:
            assert est.value == pytest.approx(2229.65, rel=2e-4)

    @pytest.mark.slow
    def test_bound_check_passes(self):
        report = sm.appendixA_bound_check(5, seed=3)
        assert report.passed
        assert report.max_ratio < 1.0
        assert len(report.samples) == 5
        assert len(report.ratio_profile) == 7
        assert "PASS" in report.pretty()
