"""Loops in the parameter quotient and their mod-2 intersections with subbundles.

The parameter space ``RP^4 x SO(3)`` modulo D2 is covered by ``S^4 x S^3``.
A lifted state is ``(a, q)`` with ``a`` a unit 5-vector and ``q`` a unit
quaternion ``(w, x, y, z)``.  Deck transformations are generated by the
antipodal map ``(a, q) -> (-a, q)`` and by left multiplication with ``±i``,
``±j`` which act on ``a`` through the coefficient action of ``g1`` and ``g2``.
The covering ``S^3 -> SO(3)`` is conjugated so that ``±i`` lands on ``g1`` and
``±j`` on ``g2``.

Parities are counted on the lift, where every defining function is a
genuine function; equivariance up to sign makes the count well defined in
the quotient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from . import family_core as fc
from .exceptions import ClosureFailure, NonTransverse, PreconditionError
from .family_core import D2_ELEMENTS, G1, G2, G_ID, GroupElement
from .utils import parallel_map, render_template

__all__ = [
    "LoopSample",
    "BundleSpec",
    "ParityTable",
    "BUNDLE_TAGS",
    "LOOP_KINDS",
    "covering_rotation",
    "deck_transform",
    "quaternion_multiply",
    "build_loop",
    "loop_variant",
    "intersection_parity",
    "crossings",
    "expected_parities",
    "parity_table",
]

logger = logging.getLogger("sweepoutlab.topology_checks")

BUNDLE_TAGS = ("A0", "A1", "A2", "A3", "A4")
LOOP_KINDS = ("c1", "c2", "c3", "c2_tilde", "c3_tilde")
LOOP_ROWS = ("c1", "c2", "c3")

CLOSURE_TOL = 1e-8
DERIVATIVE_TOL = 1e-8
DERIVATIVE_STEP = 1e-6
ZERO_RESOLUTION = 1e-6
ZERO_TOL = 1e-14

# columns are the images of the x, y, z axes
_COVER = np.array(
    [
        [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), 0.0],
        [1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0), 0.0],
        [0.0, 0.0, -1.0],
    ]
)

_UNIT_QUATERNION = {
    "id": (1.0, 0.0, 0.0, 0.0),
    "g1": (0.0, 1.0, 0.0, 0.0),
    "g2": (0.0, 0.0, 1.0, 0.0),
    "g1g2": (0.0, 0.0, 0.0, 1.0),
}


# ---------------------------------------------------------------------------
# Covering and deck transformations
# ---------------------------------------------------------------------------


def quaternion_multiply(p: Sequence[float], q: np.ndarray) -> np.ndarray:
    """Hamilton product ``p q`` for ``(w, x, y, z)`` quaternions; *q* may be ``(..., 4)``."""
    w1, x1, y1, z1 = p
    q = np.asarray(q, dtype=float)
    w2, x2, y2, z2 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def covering_rotation(q: Sequence[float]) -> np.ndarray:
    """Rotation matrix of the unit quaternion *q* under the conjugated double cover."""
    w, x, y, z = (float(v) for v in q)
    r = Rotation.from_quat([x, y, z, w]).as_matrix()
    return _COVER @ r @ _COVER.T


def deck_transform(
    g: GroupElement, a: np.ndarray, q: np.ndarray, sign: int = 1
) -> Tuple[np.ndarray, np.ndarray]:
    """Image of the lifted state ``(a, q)`` under ``sign`` times the lift of *g*."""
    a_new = sign * (fc.action_matrix(g) @ np.asarray(a, dtype=float))
    return a_new, quaternion_multiply(_UNIT_QUATERNION[g.tag], q)


# ---------------------------------------------------------------------------
# Loops
# ---------------------------------------------------------------------------


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _eps(eps0: float, s: np.ndarray) -> np.ndarray:
    return eps0 * (1.0 - 2.0 * s)


def _half_circle(u: int, w: int, theta0: float):
    def path(s: np.ndarray, eps0: float) -> np.ndarray:
        theta = theta0 + math.pi * s
        a = np.zeros(s.shape + (5,))
        a[..., u] = np.cos(theta)
        a[..., w] = np.sin(theta)
        return a

    return path


def _linear_family(pattern: Tuple[str, ...]):
    """``a`` with entries ``'1'``, ``'0'``, ``'+e'``/``'-e'`` (fixed eps0) or ``'+s'``/``'-s'`` (eps(s))."""

    def path(s: np.ndarray, eps0: float) -> np.ndarray:
        cols = []
        for entry in pattern:
            if entry == "1":
                cols.append(np.ones(s.shape))
            elif entry == "0":
                cols.append(np.zeros(s.shape))
            else:
                sign = -1.0 if entry[0] == "-" else 1.0
                value = _eps(eps0, s) if entry[1] == "s" else np.full(s.shape, eps0)
                cols.append(sign * value)
        return _unit(np.stack(cols, axis=-1))

    return path


# (row, bundle) -> (a-path, quaternion target)
_VARIANTS = {
    ("c1", "A0"): (_half_circle(0, 3, 0.0), "id"),
    ("c1", "A1"): (_half_circle(1, 4, 0.0), "id"),
    ("c1", "A2"): (_half_circle(1, 4, 0.0), "id"),
    ("c1", "A3"): (_half_circle(0, 3, math.pi / 4), "id"),
    ("c1", "A4"): (_half_circle(1, 4, math.pi / 4), "id"),
    ("c2", "A0"): (_linear_family(("1", "0", "0", "0", "0")), "g1"),
    ("c2", "A1"): (_linear_family(("1", "+e", "-e", "0", "0")), "g1"),
    ("c2", "A2"): (_linear_family(("1", "+s", "+s", "0", "0")), "g1"),
    ("c2", "A3"): (_linear_family(("1", "0", "0", "+e", "0")), "g1"),
    ("c2", "A4"): (_linear_family(("1", "0", "0", "0", "+s")), "g1"),
    ("c3", "A0"): (_linear_family(("1", "0", "0", "0", "0")), "g2"),
    ("c3", "A1"): (_linear_family(("1", "+s", "-s", "0", "0")), "g2"),
    ("c3", "A2"): (_linear_family(("1", "+e", "+e", "0", "0")), "g2"),
    ("c3", "A3"): (_linear_family(("1", "0", "0", "+e", "0")), "g2"),
    ("c3", "A4"): (_linear_family(("1", "0", "0", "0", "+s")), "g2"),
}

_KIND_VARIANT = {
    "c1": ("c1", "A0"),
    "c2": ("c2", "A0"),
    "c3": ("c3", "A0"),
    "c2_tilde": ("c2", "A1"),
    "c3_tilde": ("c3", "A1"),
}


@dataclass(frozen=True, eq=False)
class LoopSample:
    """``n + 1`` lifted states along a loop, start and end identified by a deck map.

    ``closure`` is ``(g, sign)``: the end state must equal ``sign * A_g a(0)``
    with quaternion ``±u_g q(0)``.
    """

    kind: str
    variant: Tuple[str, str]
    eps0: float
    n: int
    s: np.ndarray
    a: np.ndarray
    q: np.ndarray
    closure: Tuple[GroupElement, int]

    def state_at(self, s) -> Tuple[np.ndarray, np.ndarray]:
        path, target = _VARIANTS[self.variant]
        s = np.asarray(s, dtype=float)
        return path(s, self.eps0), _geodesic(target, s)

    @property
    def rotations(self) -> np.ndarray:
        return np.array([covering_rotation(q) for q in self.q])

    def max_chord(self) -> float:
        states = np.concatenate([self.a, self.q], axis=1)
        return float(np.max(np.linalg.norm(np.diff(states, axis=0), axis=1)))

    def closure_defect(self) -> float:
        g, sign = self.closure
        a_img, q_img = deck_transform(g, self.a[0], self.q[0], sign)
        da = float(np.linalg.norm(self.a[-1] - a_img))
        dq = min(
            float(np.linalg.norm(self.q[-1] - q_img)),
            float(np.linalg.norm(self.q[-1] + q_img)),
        )
        return max(da, dq)

    def verify(self) -> None:
        defect = self.closure_defect()
        if defect > CLOSURE_TOL:
            raise ClosureFailure(
                f"loop {self.kind} does not close",
                {"defect": defect, "closure": self.closure[0].tag},
            )
        chord = self.max_chord()
        if chord >= 10.0 / self.n:
            raise ClosureFailure(
                f"loop {self.kind} is not continuous at n={self.n}",
                {"max_chord": chord},
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "variant": list(self.variant),
            "eps0": self.eps0,
            "n": self.n,
            "closure": {"element": self.closure[0].tag, "sign": self.closure[1]},
            "start": {"a": self.a[0].tolist(), "q": self.q[0].tolist()},
            "end": {"a": self.a[-1].tolist(), "q": self.q[-1].tolist()},
        }


def _geodesic(target: str, s: np.ndarray) -> np.ndarray:
    """Constant-speed great circle from 1 to the unit quaternion of *target*."""
    u = np.asarray(_UNIT_QUATERNION[target])
    if target == "id":
        return np.broadcast_to(u, s.shape + (4,)).copy()
    half = 0.5 * math.pi * s
    return np.cos(half)[..., None] * np.array([1.0, 0, 0, 0]) + np.sin(half)[..., None] * u


def loop_variant(row: str, bundle: str, eps0: float = 0.05, n: int = 256) -> LoopSample:
    """The loop of class *row* used against subbundle *bundle*."""
    if (row, bundle) not in _VARIANTS:
        raise PreconditionError("unknown loop variant", {"row": row, "bundle": bundle})
    if n < 64:
        raise PreconditionError("n must be at least 64", {"n": n})
    if not 0.0 < eps0 <= 0.1:
        raise PreconditionError("eps0 must lie in (0, 0.1]", {"eps0": eps0})
    path, target = _VARIANTS[(row, bundle)]
    s = np.linspace(0.0, 1.0, n + 1)
    closure = (G_ID, -1) if target == "id" else ({"g1": G1, "g2": G2}[target], -1)
    loop = LoopSample(
        kind=row,
        variant=(row, bundle),
        eps0=eps0,
        n=n,
        s=s,
        a=path(s, eps0),
        q=_geodesic(target, s),
        closure=closure,
    )
    loop.verify()
    return loop


def build_loop(kind: str, eps0: float = 0.05, n: int = 256) -> LoopSample:
    """Loops ``c1, c2, c3`` and the perturbed ``c2_tilde, c3_tilde``.

    ``c1`` is the half great circle from ``e0`` to ``-e0`` through ``e3``;
    ``c2`` and ``c3`` keep ``a`` fixed while ``q`` runs from 1 to ``i`` or ``j``.
    The tilde loops move ``a`` off ``e0`` along ``[1 : ε : -ε : 0 : 0]``, with
    ``ε = eps0`` for ``c2_tilde`` and ``ε(s) = eps0 (1 - 2s)`` for ``c3_tilde``.
    """
    if kind not in _KIND_VARIANT:
        raise PreconditionError("unknown loop kind", {"kind": kind})
    loop = loop_variant(*_KIND_VARIANT[kind], eps0=eps0, n=n)
    return LoopSample(
        kind=kind,
        variant=loop.variant,
        eps0=loop.eps0,
        n=loop.n,
        s=loop.s,
        a=loop.a,
        q=loop.q,
        closure=loop.closure,
    )


# ---------------------------------------------------------------------------
# Bundles and parities
# ---------------------------------------------------------------------------

_BUNDLE_COEFFS = {
    "A0": (1.0, 0.0, 0.0, 0.0, 0.0),
    "A1": (0.0, 1.0, -1.0, 0.0, 0.0),
    "A2": (0.0, 1.0, 1.0, 0.0, 0.0),
    "A3": (0.0, 0.0, 0.0, 1.0, 0.0),
    "A4": (0.0, 0.0, 0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class BundleSpec:
    """Zero set of a linear function of ``a`` (``a0``, ``a1-a2``, ``a1+a2``, ``a3``, ``a4``)."""

    tag: str
    coefficients: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.coefficients:
            if self.tag not in _BUNDLE_COEFFS:
                raise PreconditionError("unknown bundle", {"tag": self.tag})
            object.__setattr__(self, "coefficients", _BUNDLE_COEFFS[self.tag])
        if len(self.coefficients) != 5:
            raise PreconditionError("bundle needs 5 coefficients")

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)

    def value(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=float) @ self.vector

    def perturbed(self, delta: float, index: int = 3) -> "BundleSpec":
        c = list(self.coefficients)
        c[index] += delta
        return BundleSpec(f"{self.tag}{delta:+g}a{index}", tuple(c))

    def equivariance_signs(self) -> Dict[str, Optional[int]]:
        """Sign ``σ`` with ``f(A_g a) = σ f(a)`` per group element, ``None`` if there is none."""
        c = self.vector
        out: Dict[str, Optional[int]] = {}
        for g in D2_ELEMENTS:
            img = fc.action_matrix(g).T @ c
            if np.allclose(img, c):
                out[g.tag] = 1
            elif np.allclose(img, -c):
                out[g.tag] = -1
            else:
                out[g.tag] = None
        return out

    def is_equivariant(self) -> bool:
        return all(v is not None for v in self.equivariance_signs().values())


def _loop_values(loop: LoopSample, bundle: BundleSpec, s) -> np.ndarray:
    a, _ = loop.state_at(s)
    return bundle.value(a)


def _derivative(loop: LoopSample, bundle: BundleSpec, s0: float) -> float:
    lo, hi = max(0.0, s0 - DERIVATIVE_STEP), min(1.0, s0 + DERIVATIVE_STEP)
    f = _loop_values(loop, bundle, np.array([lo, hi]))
    return float((f[1] - f[0]) / (hi - lo))


def _touching(loop: LoopSample, bundle: BundleSpec, s: float) -> NonTransverse:
    return NonTransverse(
        "defining function touches zero without crossing",
        {"loop": loop.kind, "bundle": bundle.tag, "s": s},
    )


def _sign_changes(
    loop: LoopSample, bundle: BundleSpec, s: np.ndarray, f: np.ndarray
) -> List[Tuple[float, float]]:
    """Brackets between consecutive nonzero samples of opposite sign."""
    keep = np.flatnonzero(np.abs(f) > ZERO_TOL)
    out = []
    for i, j in zip(keep[:-1], keep[1:]):
        if np.sign(f[i]) != np.sign(f[j]):
            out.append((float(s[i]), float(s[j])))
        elif j > i + 1:
            raise _touching(loop, bundle, float(s[i + 1]))
    return out


def _bracket_zeros(
    loop: LoopSample, bundle: BundleSpec, lo: float, hi: float
) -> List[Tuple[float, float]]:
    """Subdivide ``[lo, hi]`` until each sign change sits in a bracket below the resolution."""
    if hi - lo <= ZERO_RESOLUTION:
        return [(lo, hi)]
    s = np.linspace(lo, hi, 9)
    f = _loop_values(loop, bundle, s)
    out: List[Tuple[float, float]] = []
    for a, b in _sign_changes(loop, bundle, s, f):
        out.extend(_bracket_zeros(loop, bundle, a, b))
    return out


def crossings(loop: LoopSample, bundle: BundleSpec) -> List[float]:
    """Parameters ``s`` where the bundle's defining function changes sign along *loop*."""
    loop.verify()
    f = bundle.value(loop.a)
    if abs(f[0]) <= ZERO_TOL:
        raise PreconditionError(
            "defining function vanishes at the loop start",
            {"loop": loop.kind, "bundle": bundle.tag},
        )
    if abs(f[-1]) <= ZERO_TOL:
        raise _touching(loop, bundle, 1.0)

    def fn(x: float) -> float:
        return float(_loop_values(loop, bundle, np.array(x)))

    zeros: List[float] = []
    for lo, hi in _sign_changes(loop, bundle, loop.s, f):
        for a, b in _bracket_zeros(loop, bundle, lo, hi):
            root = brentq(fn, a, b, xtol=1e-14)
            slope = _derivative(loop, bundle, root)
            if abs(slope) < DERIVATIVE_TOL:
                raise NonTransverse(
                    "zero of the defining function is not transverse",
                    {"loop": loop.kind, "bundle": bundle.tag, "s": root, "slope": slope},
                )
            zeros.append(root)
    logger.debug(f"🔍 {loop.kind}/{bundle.tag}: {len(zeros)} crossing(s)")
    return zeros


def intersection_parity(loop: LoopSample, bundle: BundleSpec) -> int:
    """Number of transverse crossings of *loop* with the bundle, mod 2."""
    return len(crossings(loop, bundle)) % 2


def expected_parities() -> Dict[str, Dict[str, int]]:
    """Parities stated for the three loop classes; the A3 row repeats A0."""
    return {
        "A0": {"c1": 1, "c2": 0, "c3": 0},
        "A1": {"c1": 1, "c2": 0, "c3": 1},
        "A2": {"c1": 1, "c2": 1, "c3": 0},
        "A3": {"c1": 1, "c2": 0, "c3": 0},
        "A4": {"c1": 1, "c2": 1, "c3": 1},
    }


PARITY_TEMPLATE = """\
Intersection parities (eps0={{ eps0 }}, n={{ n }})

bundle | {% for row in rows %}{{ "%-4s"|format(row) }} {% endfor %}| expected
{% for b in bundles %}{{ "%-6s"|format(b.tag) }} | {% for v in b["values"] %}{{ "%-4s"|format(v) }} {% endfor %}| {{ b.expected | join(" ") }}{{ "" if b.ok else "   MISMATCH" }}
{% endfor %}"""


@dataclass(frozen=True)
class ParityTable:
    eps0: float
    n: int
    values: Dict[str, Dict[str, int]]
    expected: Dict[str, Dict[str, int]] = field(default_factory=expected_parities)

    @property
    def matches(self) -> bool:
        return self.values == self.expected

    def mismatches(self) -> List[Tuple[str, str]]:
        return [
            (b, r)
            for b in BUNDLE_TAGS
            for r in LOOP_ROWS
            if self.values[b][r] != self.expected[b][r]
        ]

    def pretty(self) -> str:
        bundles = [
            {
                "tag": b,
                "values": [self.values[b][r] for r in LOOP_ROWS],
                "expected": [self.expected[b][r] for r in LOOP_ROWS],
                "ok": self.values[b] == self.expected[b],
            }
            for b in BUNDLE_TAGS
        ]
        return render_template(
            PARITY_TEMPLATE,
            {"eps0": self.eps0, "n": self.n, "rows": LOOP_ROWS, "bundles": bundles},
        )

    def to_dict(self) -> dict:
        return {
            "eps0": self.eps0,
            "n": self.n,
            "values": self.values,
            "expected": self.expected,
            "matches": self.matches,
        }


def _row_task(job: Tuple[str, float, int]) -> Tuple[str, Dict[str, int]]:
    bundle, eps0, n = job
    spec = BundleSpec(bundle)
    return bundle, {
        row: intersection_parity(loop_variant(row, bundle, eps0, n), spec)
        for row in LOOP_ROWS
    }


def parity_table(eps0: float = 0.05, n: int = 256, threads: int = 1) -> ParityTable:
    """Parities of ``c1, c2, c3`` (in their bundle-specific variants) against ``A0 ... A4``."""
    jobs = [(b, eps0, n) for b in BUNDLE_TAGS]
    values = dict(parallel_map(_row_task, jobs, threads))
    table = ParityTable(eps0, n, values)
    if table.matches:
        logger.info(f"✅ parity table matches (eps0={eps0}, n={n})")
    else:
        logger.warning(f"⚠️ parity table mismatches: {table.mismatches()}")
    return table
