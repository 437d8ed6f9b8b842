"""Unit tests for the saddle family, its D2 action and the cubic classification."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from sweepoutlab import family_core as fc
from sweepoutlab.exceptions import InvariantViolation, PreconditionError, SingularLine
from sweepoutlab.family_core import (
    D2_ELEMENTS,
    G1,
    G1G2,
    G2,
    G_ID,
    CubicKind,
    FamilyParameter,
    Phi5Parameter,
    Rotation3,
)

pytestmark = pytest.mark.unit


class TestProjectivePoint:
    def test_canonical_representative(self):
        assert fc.canonicalize((-2.0, 0.0, 0.0, 0.0, 0.0)) == (1.0, 0.0, 0.0, 0.0, 0.0)

    def test_first_nonzero_is_positive(self):
        coords = fc.canonicalize((0.0, -3.0, 4.0, 0.0, 0.0))
        assert coords == pytest.approx((0.0, 0.6, -0.8, 0.0, 0.0))

    def test_zero_vector_rejected(self):
        with pytest.raises(PreconditionError):
            fc.canonicalize((0.0,) * 5)

    def test_wrong_length_rejected(self):
        with pytest.raises(PreconditionError):
            fc.canonicalize((1.0, 2.0))


class TestRotation:
    def test_identity_quaternion(self):
        rot = Rotation3.from_quaternion(1.0, 0.0, 0.0, 0.0)
        assert np.allclose(rot.matrix, np.eye(3))

    def test_non_orthogonal_rejected(self):
        with pytest.raises(PreconditionError):
            Rotation3.from_matrix(2.0 * np.eye(3))

    def test_reflection_rejected(self):
        with pytest.raises(PreconditionError):
            Rotation3.from_matrix(np.diag([1.0, 1.0, -1.0]))


class TestParameters:
    def test_a5_range(self):
        with pytest.raises(PreconditionError):
            FamilyParameter.from_coords((1, 0, 0, 0, 0), a5=1.5)

    def test_z_power_restricted(self):
        with pytest.raises(PreconditionError):
            FamilyParameter.from_coords((1, 0, 0, 0, 0), z_power=4)

    def test_phi5_from_raw_folds_length_into_s(self):
        param = Phi5Parameter.from_raw(0.0, 0.0, 0.0, 0.0, 2.0, 0.1)
        assert param.b5 == pytest.approx(1.0)
        assert param.s == pytest.approx(0.2)
        assert param.t == pytest.approx(0.2)

    def test_phi5_requires_unit_direction(self):
        with pytest.raises(PreconditionError):
            Phi5Parameter(0.0, 0.0, 0.0, 0.0, 2.0, 0.1, 0.1)

    def test_phi5_requires_nonnegative_b5(self):
        with pytest.raises(PreconditionError):
            Phi5Parameter(0.0, 0.0, 0.0, 0.0, -1.0, 0.1, 0.1)

    def test_phi5_same_zero_set_as_family(self, rng):
        param = Phi5Parameter.from_raw(0.01, -0.02, 0.3, 0.2, 1.0, 0.05)
        family = param.to_family()
        pts = rng.uniform(-1.0, 1.0, size=(50, 3))
        lhs = np.asarray(fc.eval(param, pts))
        rhs = np.asarray(fc.eval(family, pts))
        scale = lhs[0] / rhs[0]
        assert np.allclose(lhs, scale * rhs, atol=1e-12)

    def test_digest_is_orbit_invariant(self, rng):
        quat = rng.normal(size=4)
        param = FamilyParameter.from_coords(
            rng.normal(size=5), 0.3, Rotation3.from_quaternion(*quat / np.linalg.norm(quat))
        )
        digests = {fc.d2_act(g, param).digest() for g in D2_ELEMENTS}
        assert len(digests) == 1


class TestEvaluation:
    def test_apex_vanishes_on_diagonal(self, apex):
        assert fc.eval(apex, (0.5, 0.5, 0.0)) == pytest.approx(0.0)
        assert fc.eval(apex, (0.5, -0.5, 0.3)) == pytest.approx(0.0)

    def test_gradient_of_apex(self, apex):
        assert np.allclose(fc.gradient(apex, (1.0, 0.0, 0.0)), (2.0, 0.0, 0.0))

    def test_hessian_of_apex(self, apex):
        assert np.allclose(fc.hessian(apex, (0.1, 0.2, 0.3)), np.diag([2.0, -2.0, 0.0]))

    def test_ds_partial_is_profile(self):
        param = Phi5Parameter.from_raw(0.0, 0.0, 0.6, 0.1, 1.0, 0.01)
        z = 0.4
        assert fc.ds_partial(param, (0.2, 0.1, z)) == pytest.approx(float(param.profile(z)))


class TestGroup:
    def test_composition_table(self):
        assert G1 @ G2 == G1G2
        assert G2 @ G1 == G1G2
        assert G1 @ G1 == G_ID

    def test_action_matrix_is_involution(self):
        for g in D2_ELEMENTS:
            m = fc.action_matrix(g)
            assert np.allclose(m @ m, np.eye(5))

    def test_unknown_element(self):
        with pytest.raises(PreconditionError):
            fc.GroupElement("g3")

    def test_equivariance_holds(self, rng):
        for _ in range(5):
            quat = rng.normal(size=4)
            param = FamilyParameter.from_coords(
                rng.normal(size=5),
                rng.uniform(0.0, 1.0),
                Rotation3.from_quaternion(*quat / np.linalg.norm(quat)),
            )
            assert fc.verify_equivariance(param, 32)

    def test_z_squared_control_breaks_equivariance(self):
        param = FamilyParameter.from_coords((1.0, 0.2, -0.1, 0.3, 0.1), 0.5, z_power=2)
        assert not fc.verify_equivariance(param, 32)

    def test_quotient_representative_is_shared_by_orbit(self, rng):
        param = FamilyParameter.from_coords(rng.normal(size=5), 0.2)
        reps = {fc.quotient_representative(fc.d2_act(g, param)) for g in D2_ELEMENTS}
        assert len(reps) == 1


class TestCubicClassification:
    def test_three_simple(self):
        profile = fc.classify_cubic(-3.0, 0.0, 1.0)
        assert profile.kind is CubicKind.THREE_SIMPLE
        assert profile.root_values == pytest.approx([-math.sqrt(3), 0.0, math.sqrt(3)], abs=1e-12)

    def test_one_simple(self):
        profile = fc.classify_cubic(1.0, 0.0, 1.0)
        assert profile.kind is CubicKind.ONE_SIMPLE
        assert profile.root_values == pytest.approx([0.0], abs=1e-12)

    def test_simple_plus_double(self):
        profile = fc.classify_cubic(-3.0, 2.0, 1.0)
        assert profile.kind is CubicKind.SIMPLE_PLUS_DOUBLE
        assert profile.roots[0] == (pytest.approx(-2.0), 1)
        assert profile.roots[1] == (pytest.approx(1.0), 2)
        assert profile.has_multiple_root

    def test_triple(self):
        assert fc.classify_cubic(0.0, 0.0, 0.7).kind is CubicKind.TRIPLE

    def test_linear_profile(self):
        profile = fc.classify_cubic(2.0, 1.0, 0.0)
        assert profile.kind is CubicKind.ONE_SIMPLE
        assert profile.root_values == pytest.approx([-0.5])

    def test_degenerate_profile(self):
        assert fc.classify_cubic(0.0, 1.0, 0.0).kind is CubicKind.DEGENERATE

    def test_table_profile_three_roots(self):
        assert fc.classify_cubic(-0.6, 0.1, 1.0).kind is CubicKind.THREE_SIMPLE

    @pytest.mark.parametrize(
        "coeffs,count",
        [([1.0, 0.0, -3.0, 0.0], 3), ([1.0, 0.0, 1.0, 0.0], 1), ([1.0, -2.0, 1.0], 1)],
    )
    def test_sturm_count(self, coeffs, count):
        assert fc.sturm_root_count(coeffs) == count

    def test_sturm_disagreement_raises(self, monkeypatch):
        monkeypatch.setattr(fc, "sturm_root_count", lambda coeffs: 1)
        with pytest.raises(InvariantViolation) as info:
            fc.classify_cubic(-3.0, 0.0, 1.0)
        assert info.value.details["sturm"] == 1


class TestSingularities:
    def test_desingularized_apex_has_singular_origin(self, apex):
        points = fc.singular_points(replace(apex, a5=0.5))
        assert len(points) == 1
        assert np.allclose(points[0], 0.0)

    def test_plane_pair_raises_singular_line(self, apex):
        with pytest.raises(SingularLine):
            fc.singular_points(apex)

    def test_plane_pair_outside_ball_is_smooth(self):
        param = FamilyParameter.from_coords((1.0, -4.0, 0.0, 0.0, 4.0))
        assert fc.singular_points(param) == []

    def test_generic_member_is_smooth(self):
        param = FamilyParameter.from_coords((1.0, 0.0, 0.0, 1.0, 0.0), 0.1)
        assert fc.singular_points(param) == []


def _random_rotation(rng: np.random.Generator) -> Rotation3:
    return Rotation3.from_quaternion(*rng.normal(size=4))


def _random_member(rng: np.random.Generator) -> FamilyParameter:
    return FamilyParameter.from_coords(
        rng.normal(size=5), float(rng.uniform(0.0, 1.0)), _random_rotation(rng)
    )


def _random_points(rng: np.random.Generator, count: int) -> np.ndarray:
    pts = rng.normal(size=(count, 3))
    return pts * (rng.uniform(0.0, 1.0, size=(count, 1)) / np.linalg.norm(pts, axis=1)[:, None])


STEP = 1e-5
FD_TOL = 1e-6


class TestRandomInputs:
    def test_canonicalize_is_idempotent(self, rng):
        for _ in range(10_000):
            raw = rng.normal(size=5) * 10.0 ** rng.uniform(-6, 6)
            once = fc.canonicalize(raw)
            assert np.allclose(fc.canonicalize(once), once, rtol=0.0, atol=1e-15)
            assert np.allclose(fc.canonicalize(-3.5 * raw), once, rtol=0.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_gradient_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        param = _random_member(rng)
        for x in _random_points(rng, 10):
            fd = [
                (fc.eval(param, x + STEP * e) - fc.eval(param, x - STEP * e)) / (2 * STEP)
                for e in np.eye(3)
            ]
            assert np.allclose(fc.gradient(param, x), fd, rtol=0.0, atol=FD_TOL)

    @pytest.mark.parametrize("seed", range(10))
    def test_hessian_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        param = _random_member(rng)
        for x in _random_points(rng, 10):
            fd = np.stack(
                [
                    (fc.gradient(param, x + STEP * e) - fc.gradient(param, x - STEP * e))
                    / (2 * STEP)
                    for e in np.eye(3)
                ]
            )
            hess = fc.hessian(param, x)
            assert np.allclose(hess, fd, rtol=0.0, atol=FD_TOL)
            assert np.allclose(hess, hess.T)

    @pytest.mark.parametrize("seed", range(10))
    def test_phi5_derivatives_match_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        b1, b2 = rng.uniform(-0.01, 0.01, size=2)
        param = Phi5Parameter.from_raw(
            b1, b2, *rng.normal(size=2), abs(rng.normal()) + 0.1, float(rng.uniform(0.1, 0.5))
        )
        for x in _random_points(rng, 10):
            fd_s = (
                fc.eval(param.with_s(param.s + STEP), x)
                - fc.eval(param.with_s(param.s - STEP), x)
            ) / (2 * STEP)
            assert fc.ds_partial(param, x) == pytest.approx(fd_s, abs=FD_TOL)
            fd_grad = [
                (fc.eval(param, x + STEP * e) - fc.eval(param, x - STEP * e)) / (2 * STEP)
                for e in np.eye(3)
            ]
            assert np.allclose(fc.gradient(param, x), fd_grad, rtol=0.0, atol=FD_TOL)
