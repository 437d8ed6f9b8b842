"""Unit tests for lifted loops, deck transformations and intersection parities."""

from __future__ import annotations

import numpy as np
import pytest

from sweepoutlab import topology_checks as tc
from sweepoutlab.exceptions import ClosureFailure, PreconditionError
from sweepoutlab.family_core import G1, G1G2, G2, G_ID

pytestmark = pytest.mark.unit


class TestCovering:
    def test_identity(self):
        assert np.allclose(tc.covering_rotation((1.0, 0.0, 0.0, 0.0)), np.eye(3))

    @pytest.mark.parametrize("tag,g", [("g1", G1), ("g2", G2), ("g1g2", G1G2)])
    def test_unit_quaternions_cover_the_group(self, tag, g):
        q = {"g1": (0, 1, 0, 0), "g2": (0, 0, 1, 0), "g1g2": (0, 0, 0, 1)}[tag]
        assert np.allclose(tc.covering_rotation(q), g.matrix)

    def test_quaternion_product(self):
        i = np.array([0.0, 1.0, 0.0, 0.0])
        j = np.array([0.0, 0.0, 1.0, 0.0])
        assert np.allclose(tc.quaternion_multiply(i, j), (0.0, 0.0, 0.0, 1.0))
        assert np.allclose(tc.quaternion_multiply(i, i), (-1.0, 0.0, 0.0, 0.0))

    def test_deck_transform_antipodal(self):
        a = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
        a_img, q_img = tc.deck_transform(G_ID, a, np.array([1.0, 0, 0, 0]), sign=-1)
        assert np.allclose(a_img, -a)
        assert np.allclose(q_img, (1.0, 0.0, 0.0, 0.0))


class TestLoops:
    @pytest.mark.parametrize("kind", tc.LOOP_KINDS)
    def test_loops_close(self, kind):
        loop = tc.build_loop(kind, n=64)
        assert loop.kind == kind
        assert loop.closure_defect() <= tc.CLOSURE_TOL
        assert loop.max_chord() < 10.0 / 64

    def test_c1_ends_antipodal(self):
        loop = tc.build_loop("c1", n=64)
        assert np.allclose(loop.a[-1], -loop.a[0])

    def test_rotations_are_proper(self):
        loop = tc.build_loop("c2", n=64)
        dets = np.linalg.det(loop.rotations)
        assert np.allclose(dets, 1.0)

    def test_c3_tilde_reverses_offset(self):
        loop = tc.build_loop("c3_tilde", eps0=0.05, n=64)
        assert loop.a[0][1] > 0 > loop.a[-1][1]

    @pytest.mark.parametrize(
        "row,bundle,kwargs",
        [("c4", "A0", {}), ("c1", "A0", {"n": 32}), ("c1", "A0", {"eps0": 0.2})],
    )
    def test_bad_variants(self, row, bundle, kwargs):
        with pytest.raises(PreconditionError):
            tc.loop_variant(row, bundle, **kwargs)

    def test_unknown_kind(self):
        with pytest.raises(PreconditionError):
            tc.build_loop("c5")

    def test_broken_closure_is_reported(self):
        loop = tc.build_loop("c2", n=64)
        broken = tc.LoopSample(
            loop.kind, loop.variant, loop.eps0, loop.n, loop.s, loop.a, loop.q, (G2, -1)
        )
        with pytest.raises(ClosureFailure):
            broken.verify()

    def test_to_dict(self):
        data = tc.build_loop("c2", n=64).to_dict()
        assert data["closure"] == {"element": "g1", "sign": -1}


class TestBundles:
    def test_unknown_bundle(self):
        with pytest.raises(PreconditionError):
            tc.BundleSpec("A9")

    def test_standard_bundles_are_equivariant(self):
        for tag in tc.BUNDLE_TAGS:
            assert tc.BundleSpec(tag).is_equivariant()

    def test_mixing_a0_and_a1_breaks_equivariance(self):
        assert not tc.BundleSpec("A0").perturbed(1e-3, index=1).is_equivariant()

    def test_a0_signs(self):
        assert tc.BundleSpec("A0").equivariance_signs() == {
            "id": 1,
            "g1": -1,
            "g2": -1,
            "g1g2": 1,
        }

    def test_crossing_position(self):
        zeros = tc.crossings(tc.loop_variant("c1", "A0", n=64), tc.BundleSpec("A0"))
        assert zeros == [pytest.approx(0.5, abs=1e-10)]

    def test_eps_sign_change_in_the_middle(self):
        zeros = tc.crossings(tc.loop_variant("c3", "A1", n=64), tc.BundleSpec("A1"))
        assert zeros == [pytest.approx(0.5, abs=1e-10)]

    def test_loop_starting_on_bundle(self):
        with pytest.raises(PreconditionError):
            tc.crossings(tc.loop_variant("c2", "A0", n=64), tc.BundleSpec("A1"))

    def test_perturbed_bundle_keeps_parity(self):
        loop = tc.loop_variant("c1", "A0", n=64)
        for delta in (-1e-3, 1e-3):
            assert tc.intersection_parity(loop, tc.BundleSpec("A0").perturbed(delta)) == 1


class TestParityTable:
    def test_expected_values(self):
        table = tc.parity_table(eps0=0.05, n=64)
        assert table.matches
        assert table.mismatches() == []
        assert table.values["A4"] == {"c1": 1, "c2": 1, "c3": 1}

    def test_stable_under_refinement(self):
        assert tc.parity_table(0.05, 64).values == tc.parity_table(0.025, 128).values

    def test_pretty_and_dict(self):
        table = tc.parity_table(eps0=0.05, n=64)
        text = table.pretty()
        assert "eps0=0.05" in text
        assert "MISMATCH" not in text
        assert table.to_dict()["matches"] is True

    def test_mismatch_is_flagged(self):
        values = {b: dict(row) for b, row in tc.expected_parities().items()}
        values["A2"]["c3"] = 1
        table = tc.ParityTable(0.05, 64, values)
        assert table.mismatches() == [("A2", "c3")]
        assert "MISMATCH" in table.pretty()
