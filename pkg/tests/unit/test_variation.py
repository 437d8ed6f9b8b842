"""Unit tests for the Omega domain, sheet areas and the first variation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sweepoutlab import family_core as fc
from sweepoutlab import variation as vr
from sweepoutlab.exceptions import NearSingular, PreconditionError
from sweepoutlab.family_core import FamilyParameter, Phi5Parameter

pytestmark = pytest.mark.unit


@pytest.fixture()
def omega():
    return vr.build_omega(0.002, -0.001, 1e-5)


class TestOmega:
    def test_radius(self):
        assert vr.omega_radius(1e-4) == pytest.approx(0.2)

    def test_gradient_bound(self, omega):
        assert omega.gradient_bound == pytest.approx(10.0 * (0.02 + 0.4))
        assert omega.max_gradient <= omega.gradient_bound

    def test_flat_over_inner_disk(self, omega):
        xy = np.array([[omega.b1, omega.b2], [omega.b1 + 0.5 * omega.R, omega.b2]])
        assert np.allclose(omega.height(xy), omega.c)
        assert np.allclose(omega.height_gradient(xy), 0.0)

    def test_sphere_outside_outer_disk(self, omega):
        xy = np.array([[omega.b1 + 3.0 * omega.R, omega.b2]])
        assert omega.height(xy) == pytest.approx(omega.sphere_height(xy))

    def test_cap_lies_above_sphere(self, omega):
        assert omega.c > 1.0
        xy = np.array([[omega.b1 + 1.5 * omega.R, omega.b2]])
        assert omega.height(xy)[0] >= omega.sphere_height(xy)[0]

    def test_regions(self, omega):
        pts = np.array(
            [
                [omega.b1, omega.b2, 0.0],
                [omega.b1 + 1.5 * omega.R, omega.b2, 0.0],
                [omega.b1 + 0.2, omega.b2, 0.0],
                [omega.b1 + 0.5, omega.b2, 0.0],
            ]
        )
        assert omega.region(pts).tolist() == [1, 2, 3, 4]

    def test_normal_points_up_on_the_cap(self, omega):
        n = omega.normal(np.array([omega.b1, omega.b2, omega.c]))
        assert np.allclose(n, (0.0, 0.0, 1.0))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"b1": 0.0, "b2": 0.0, "t": 2e-4},
            {"b1": 0.02, "b2": 0.0, "t": 1e-5},
            {"b1": 0.0, "b2": 0.0, "t": 1e-4, "eps2": 1e-3},
            {"b1": 0.0, "b2": 0.0, "t": 0.0},
        ],
    )
    def test_preconditions(self, kwargs):
        with pytest.raises(PreconditionError):
            vr.build_omega(**kwargs)

    def test_corner_axis_needs_wider_eps1(self):
        with pytest.raises(PreconditionError):
            vr.build_omega(0.01, -0.01, 2.5e-5)

    def test_corner_axis_with_wider_eps1(self):
        omega = vr.build_omega(0.01, -0.01, 2.5e-5, eps1=0.02)
        assert omega.R == pytest.approx(0.1)
        assert omega.c == pytest.approx(1.0 + 1e-3 * 2.5e-5, abs=1e-12)
        assert omega.gradient_bound == pytest.approx(4.4)
        assert omega.max_gradient <= omega.gradient_bound

    def test_to_dict(self, omega):
        data = omega.to_dict()
        assert data["blend_kind"] == "quintic-hermite"
        assert data["R"] == pytest.approx(20.0 * math.sqrt(1e-5))


class TestCurvature:
    def test_saddle_is_minimal_at_origin(self):
        saddle = FamilyParameter.from_coords((1.0, 0.0, 0.0, -1.0, 0.0))
        assert vr.mean_curvature(saddle, (0.0, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_singular_point_has_no_normal(self, apex):
        param = FamilyParameter(apex.proj, 0.5)
        with pytest.raises(NearSingular):
            vr.mean_curvature(param, (0.0, 0.0, 0.0))

    def test_deformation_field_transports_level_set(self, admissible):
        x = np.array([0.3, 0.2, 0.4])
        v = vr.deformation_field(admissible, x)
        residual = float(fc.ds_partial(admissible, x)) + float(fc.gradient(admissible, x) @ v)
        assert residual == pytest.approx(0.0, abs=1e-12)


class TestSheetArea:
    def test_small_opening_is_close_to_two_disks(self):
        param = Phi5Parameter.from_raw(0.0, 0.0, 0.6, 0.1, 1.0, 1e-6)
        est = vr.sheet_area(param, None, 32)
        assert est.value == pytest.approx(2.0 * math.pi, rel=1e-2)
        assert est.resolutions_used == (32, 64)

    def test_omega_area_exceeds_ball_area(self, admissible, omega):
        in_ball = vr.sheet_area(admissible, None, 32).value
        in_omega = vr.sheet_area(admissible, omega, 32).value
        assert in_omega >= in_ball - 1e-6


class TestFirstVariation:
    def test_requires_s_below_t(self, omega):
        param = Phi5Parameter(0.002, -0.001, 0.0, 0.0, 1.0, s=2e-5, t=2e-5)
        with pytest.raises(PreconditionError):
            vr.first_variation(param, omega, 16)

    @pytest.mark.slow
    def test_breakdown_matches_finite_difference(self, admissible, omega):
        bd = vr.first_variation(admissible, omega, 32)
        assert bd.I1 < 0
        assert abs(bd.total - bd.fd_total) <= 5.0 * (bd.fd_step**2 + bd.error)
        assert bd.boundary_total == pytest.approx(sum(bd.terms[2:]), rel=1e-10, abs=1e-12)
        assert bd.to_dict()["param"]["t"] == admissible.t

    def test_integrals_have_all_terms(self, admissible, omega):
        out = vr.variation_integrals(admissible, omega, 16)
        for key in ("I1", "I2", "I3", "I4", "I5", "I6", "boundary_total", "norm_check"):
            assert key in out
        assert out["norm_check"] == 1.0


class TestAdmissibleSampling:
    def test_samples_satisfy_smallness(self, rng):
        for _ in range(20):
            p = vr.sample_admissible(rng)
            assert math.hypot(p.b1, p.b2) < vr.DEFAULT_EPS1
            assert 0.0 < p.s <= p.t < vr.DEFAULT_EPS2
            assert p.b5 >= 0.0

    def test_fixed_t(self, rng):
        p = vr.sample_admissible(rng, t=3e-6)
        assert p.t == 3e-6
