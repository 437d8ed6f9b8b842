"""Exact evaluation of the saddle polynomial family and its D2 symmetry.

A member of the family is the zero set of

    p(y) = a0 * (y0**2 - y1**2 + a5 * y2**3) + a1*y0 + a2*y1 + a3*y2 + a4,
    y = Q @ x,

where ``[a0:...:a4]`` is a point of RP^4, ``a5`` in [0, 1] desingularizes the
pair of planes ``y0 = +-y1`` and ``Q`` is a rotation.  The module also carries
the translated parametrization used near the apex,

    p(x) = (x - b1)**2 - (y - b2)**2 + s * (b3*z + b4 + b5*z**3),

and the cubic root classification that decides where the surfaces are singular.

All values are immutable; every function here is pure.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from .exceptions import InvariantViolation, PreconditionError, SingularLine

__all__ = [
    "ProjectivePoint4",
    "Rotation3",
    "FamilyParameter",
    "Phi5Parameter",
    "GroupElement",
    "CubicKind",
    "CubicProfile",
    "D2_ELEMENTS",
    "G_ID",
    "G1",
    "G2",
    "G1G2",
    "canonicalize",
    "compose",
    "action_matrix",
    "eval",
    "gradient",
    "hessian",
    "ds_partial",
    "d2_act",
    "verify_equivariance",
    "classify_cubic",
    "sturm_root_count",
    "singular_points",
    "quotient_representative",
]

logger = logging.getLogger("sweepoutlab.family_core")

ORTHO_TOL = 1e-12
EQUIVARIANCE_TOL = 1e-10
DISCRIMINANT_RTOL = 1e-12
LINE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Projective points and rotations
# ---------------------------------------------------------------------------


def canonicalize(coords: Iterable[float]) -> Tuple[float, ...]:
    """Return the unit-norm, first-nonzero-positive representative of *coords*."""
    v = np.asarray(list(coords), dtype=float)
    if v.shape != (5,):
        raise PreconditionError("projective point needs 5 coordinates", {"shape": v.shape})
    if not np.all(np.isfinite(v)):
        raise PreconditionError("projective point has non-finite coordinates")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise PreconditionError("the zero vector is not a projective point")
    # already-normalized input is left bit-for-bit untouched
    if abs(norm - 1.0) > 1e-15:
        v = v / norm
    nonzero = np.flatnonzero(v)
    if v[nonzero[0]] < 0:
        v = -v
    v = v + 0.0  # drop negative zeros
    return tuple(float(c) for c in v)


@dataclass(frozen=True)
class ProjectivePoint4:
    """A point ``[a0:a1:a2:a3:a4]`` of RP^4 held by its canonical representative."""

    a: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", canonicalize(self.a))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.a, dtype=float)


@dataclass(frozen=True)
class Rotation3:
    """A rotation matrix, stored row-major."""

    q: Tuple[float, ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.q, dtype=float).reshape(3, 3)
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHO_TOL:
            raise PreconditionError("rotation matrix is not orthogonal", {"q": self.q})
        if abs(np.linalg.det(m) - 1.0) > ORTHO_TOL:
            raise PreconditionError("rotation matrix must have determinant +1", {"q": self.q})
        object.__setattr__(self, "q", tuple(float(c) + 0.0 for c in m.ravel()))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.q, dtype=float).reshape(3, 3)

    @classmethod
    def identity(cls) -> "Rotation3":
        return cls(tuple(np.eye(3).ravel()))

    @classmethod
    def from_matrix(cls, m: Sequence[Sequence[float]] | np.ndarray) -> "Rotation3":
        return cls(tuple(np.asarray(m, dtype=float).ravel()))

    @classmethod
    def from_quaternion(cls, q0: float, q1: float, q2: float, q3: float) -> "Rotation3":
        """Rotation of the unit quaternion ``q0 + q1 i + q2 j + q3 k``."""
        if q0 == q1 == q2 == q3 == 0:
            raise PreconditionError("zero quaternion has no rotation")
        # scipy stores the scalar part last
        m = Rotation.from_quat([q1, q2, q3, q0]).as_matrix()
        return cls.from_matrix(m)


# ---------------------------------------------------------------------------
# Family parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyParameter:
    """One surface of the family: ``(proj, a5, rot)``.

    ``z_power`` replaces the cubic ``a5`` term by ``a5 * y2**z_power``.  Only 3
    belongs to the family; 2 exists as the symmetry-breaking negative control.
    """

    proj: ProjectivePoint4
    a5: float = 0.0
    rot: Rotation3 = field(default_factory=Rotation3.identity)
    z_power: int = 3

    def __post_init__(self) -> None:
        if not 0.0 <= self.a5 <= 1.0:
            raise PreconditionError("a5 must lie in [0, 1]", {"a5": self.a5})
        if self.z_power not in (2, 3):
            raise PreconditionError("z_power must be 2 or 3", {"z_power": self.z_power})
        object.__setattr__(self, "a5", float(self.a5))

    @classmethod
    def from_coords(
        cls,
        coords: Iterable[float],
        a5: float = 0.0,
        rot: Rotation3 | None = None,
        z_power: int = 3,
    ) -> "FamilyParameter":
        return cls(
            ProjectivePoint4(tuple(coords)),
            a5,
            rot if rot is not None else Rotation3.identity(),
            z_power,
        )

    @property
    def coefficients(self) -> np.ndarray:
        return self.proj.vector

    def digest(self) -> str:
        """Stable short hash of the D2 orbit of this parameter."""
        rep = quotient_representative(self)
        key = (
            tuple(round(c, 12) + 0.0 for c in rep.proj.a),
            round(rep.a5, 12),
            tuple(round(c, 12) + 0.0 for c in rep.rot.q),
            rep.z_power,
        )
        return hashlib.sha1(repr(key).encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "proj": list(self.proj.a),
            "a5": self.a5,
            "rot": [list(row) for row in self.rot.matrix],
        }


@dataclass(frozen=True)
class Phi5Parameter:
    """Translated cubic ``(x-b1)^2 - (y-b2)^2 + s (b3 z + b4 + b5 z^3)``.

    The direction ``(b3, b4, b5)`` is a unit vector with ``b5 >= 0``; ``s`` is
    the opening scale and ``t >= s`` the cap scale that sizes the enlarged
    domain.  ``s = 0`` is the plane pair through ``(b1, b2)``.
    """

    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    s: float
    t: float

    def __post_init__(self) -> None:
        norm2 = self.b3**2 + self.b4**2 + self.b5**2
        if abs(norm2 - 1.0) > 1e-12:
            raise PreconditionError(
                "direction (b3, b4, b5) must be a unit vector", {"norm2": norm2}
            )
        if self.b5 < 0:
            raise PreconditionError("b5 must be nonnegative", {"b5": self.b5})
        if self.t <= 0 or self.s < 0 or self.s > self.t:
            raise PreconditionError(
                "need 0 <= s <= t and t > 0", {"s": self.s, "t": self.t}
            )

    @classmethod
    def from_raw(
        cls,
        b1: float,
        b2: float,
        b3: float,
        b4: float,
        b5: float,
        s: float,
        t: float | None = None,
    ) -> "Phi5Parameter":
        """Normalize an arbitrary direction and fold its length into ``s``."""
        n = math.sqrt(b3 * b3 + b4 * b4 + b5 * b5)
        if n == 0:
            raise PreconditionError("direction (b3, b4, b5) must be nonzero")
        s_eff = s * n
        return cls(b1, b2, b3 / n, b4 / n, b5 / n, s_eff, t if t is not None else s_eff)

    @property
    def direction(self) -> np.ndarray:
        return np.array([self.b3, self.b4, self.b5])

    def with_s(self, s: float) -> "Phi5Parameter":
        return replace(self, s=s, t=max(self.t, s))

    def profile(self, z: np.ndarray | float) -> np.ndarray:
        """The cubic ``b3 z + b4 + b5 z^3``, which is also ``dp/ds``."""
        z = np.asarray(z, dtype=float)
        return self.b3 * z + self.b4 + self.b5 * z**3

    def profile_derivative(self, z: np.ndarray | float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.b3 + 3.0 * self.b5 * z**2

    def to_family(self) -> FamilyParameter:
        """The same surface written as a member of the projective family."""
        a5 = self.s * self.b5
        if a5 > 1.0:
            raise PreconditionError("s * b5 exceeds 1", {"s": self.s, "b5": self.b5})
        coords = (
            1.0,
            -2.0 * self.b1,
            2.0 * self.b2,
            self.s * self.b3,
            self.b1**2 - self.b2**2 + self.s * self.b4,
        )
        return FamilyParameter.from_coords(coords, a5)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("b1", "b2", "b3", "b4", "b5", "s", "t")}


AnyParameter = Union[FamilyParameter, Phi5Parameter]


# ---------------------------------------------------------------------------
# D2 group
# ---------------------------------------------------------------------------

_MATRICES = {
    "id": ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    "g1": ((0, 1, 0), (1, 0, 0), (0, 0, -1)),
    "g2": ((0, -1, 0), (-1, 0, 0), (0, 0, -1)),
    "g1g2": ((-1, 0, 0), (0, -1, 0), (0, 0, 1)),
}

# signed permutations of (a0, ..., a4): entry k is (source index, sign)
_COEFF_ACTION = {
    "id": ((0, 1), (1, 1), (2, 1), (3, 1), (4, 1)),
    "g1": ((0, -1), (2, 1), (1, 1), (3, -1), (4, 1)),
    "g2": ((0, -1), (2, -1), (1, -1), (3, -1), (4, 1)),
    "g1g2": ((0, 1), (1, -1), (2, -1), (3, 1), (4, 1)),
}


@dataclass(frozen=True)
class GroupElement:
    """An element of D2 = {id, g1, g2, g1g2} acting on R^3."""

    tag: str

    def __post_init__(self) -> None:
        if self.tag not in _MATRICES:
            raise PreconditionError("unknown D2 element", {"tag": self.tag})

    @property
    def matrix(self) -> np.ndarray:
        return np.array(_MATRICES[self.tag], dtype=int)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)


G_ID = GroupElement("id")
G1 = GroupElement("g1")
G2 = GroupElement("g2")
G1G2 = GroupElement("g1g2")
D2_ELEMENTS: Tuple[GroupElement, ...] = (G_ID, G1, G2, G1G2)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """The product ``g h`` (apply ``h`` first)."""
    m = g.matrix @ h.matrix
    for candidate in D2_ELEMENTS:
        if np.array_equal(candidate.matrix, m):
            return candidate
    raise AssertionError("D2 is not closed under multiplication")  # pragma: no cover


def action_matrix(g: GroupElement) -> np.ndarray:
    """5x5 signed permutation by which *g* acts on ``(a0, ..., a4)``."""
    out = np.zeros((5, 5))
    for k, (src, sign) in enumerate(_COEFF_ACTION[g.tag]):
        out[k, src] = sign
    return out


def d2_act(g: GroupElement, param: FamilyParameter) -> FamilyParameter:
    """Joint action ``g (a, Q) = (g a, g Q)``, canonicalized."""
    a = param.proj.vector
    new_a = np.array([sign * a[src] for src, sign in _COEFF_ACTION[g.tag]])
    new_q = g.matrix.astype(float) @ param.rot.matrix
    return replace(
        param,
        proj=ProjectivePoint4(tuple(new_a)),
        rot=Rotation3.from_matrix(new_q),
    )


# ---------------------------------------------------------------------------
# Evaluation and derivatives
# ---------------------------------------------------------------------------


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 3:
        raise PreconditionError("points must have 3 coordinates", {"shape": pts.shape})
    return pts


def _scalar(out: np.ndarray):
    return float(out) if np.ndim(out) == 0 else out


def eval(param: AnyParameter, x) -> float | np.ndarray:  # noqa: A001
    """Value of the defining polynomial at *x* (shape ``(..., 3)``)."""
    pts = _as_points(x)
    if isinstance(param, Phi5Parameter):
        u = pts[..., 0] - param.b1
        v = pts[..., 1] - param.b2
        return _scalar(u * u - v * v + param.s * param.profile(pts[..., 2]))
    a0, a1, a2, a3, a4 = param.proj.a
    y = pts @ param.rot.matrix.T
    y0, y1, y2 = y[..., 0], y[..., 1], y[..., 2]
    p = a0 * (y0 * y0 - y1 * y1 + param.a5 * y2**param.z_power)
    return _scalar(p + a1 * y0 + a2 * y1 + a3 * y2 + a4)


def gradient(param: AnyParameter, x) -> np.ndarray:
    pts = _as_points(x)
    if isinstance(param, Phi5Parameter):
        return np.stack(
            [
                2.0 * (pts[..., 0] - param.b1),
                -2.0 * (pts[..., 1] - param.b2),
                param.s * param.profile_derivative(pts[..., 2]),
            ],
            axis=-1,
        )
    a0, a1, a2, a3, _ = param.proj.a
    k = param.z_power
    q = param.rot.matrix
    y = pts @ q.T
    gy = np.stack(
        [
            2.0 * a0 * y[..., 0] + a1,
            -2.0 * a0 * y[..., 1] + a2,
            a0 * param.a5 * k * y[..., 2] ** (k - 1) + a3,
        ],
        axis=-1,
    )
    # grad_x = Q^T grad_y
    return gy @ q


def hessian(param: AnyParameter, x) -> np.ndarray:
    pts = _as_points(x)
    diag = np.zeros(pts.shape[:-1] + (3,))
    if isinstance(param, Phi5Parameter):
        diag[..., 0] = 2.0
        diag[..., 1] = -2.0
        diag[..., 2] = 6.0 * param.b5 * param.s * pts[..., 2]
        return diag[..., :, None] * np.eye(3)
    a0 = param.proj.a[0]
    k = param.z_power
    q = param.rot.matrix
    y = pts @ q.T
    diag[..., 0] = 2.0 * a0
    diag[..., 1] = -2.0 * a0
    diag[..., 2] = a0 * param.a5 * k * (k - 1) * y[..., 2] ** (k - 2)
    hy = diag[..., :, None] * np.eye(3)
    return np.einsum("ji,...jk,kl->...il", q, hy, q)


def ds_partial(param: Phi5Parameter, x) -> float | np.ndarray:
    """``dp/ds = b3 z + b4 + b5 z^3`` in the translated parametrization."""
    if not isinstance(param, Phi5Parameter):
        raise PreconditionError("ds_partial is defined for Phi5Parameter only")
    pts = _as_points(x)
    return _scalar(param.profile(pts[..., 2]))


# ---------------------------------------------------------------------------
# Equivariance
# ---------------------------------------------------------------------------


def _agree_up_to_sign(lhs: np.ndarray, rhs: np.ndarray) -> bool:
    pivot = int(np.argmax(np.abs(rhs)))
    if abs(rhs[pivot]) == 0.0:
        return bool(np.max(np.abs(lhs)) <= EQUIVARIANCE_TOL)
    sign = 1.0 if lhs[pivot] * rhs[pivot] >= 0 else -1.0
    scale = np.maximum(1.0, np.abs(rhs))
    return bool(np.all(np.abs(lhs - sign * rhs) <= EQUIVARIANCE_TOL * scale))


def verify_equivariance(
    param: FamilyParameter, n_points: int, seed: int = 0
) -> bool:
    """Check that every ``g`` in D2 maps the zero set of *param* to that of ``g param``.

    Two identities are checked at *n_points* random points of ``[-1, 1]^3``:
    the joint action on ``(a, Q)`` leaves the evaluated polynomial unchanged
    up to one sign per ``g``, and without rotation ``p_{g a}(x) = +-p_a(g^-1 x)``.
    """
    if n_points < 1:
        raise PreconditionError("n_points must be at least 1", {"n_points": n_points})
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(n_points, 3))
    flat = replace(param, rot=Rotation3.identity())
    base = np.atleast_1d(eval(param, pts))
    for g in D2_ELEMENTS:
        moved = np.atleast_1d(eval(d2_act(g, param), pts))
        if not _agree_up_to_sign(moved, base):
            logger.debug(f"joint action check failed for {g.tag}")
            return False
        moved_flat = np.atleast_1d(eval(d2_act(g, flat), pts))
        # g is an involution, g^-1 x = g x
        pulled = np.atleast_1d(eval(flat, pts @ g.matrix.T.astype(float)))
        if not _agree_up_to_sign(moved_flat, pulled):
            logger.debug(f"polynomial identity check failed for {g.tag}")
            return False
    return True


# ---------------------------------------------------------------------------
# Cubic profile classification
# ---------------------------------------------------------------------------


class CubicKind(str, Enum):
    ONE_SIMPLE = "OneSimple"
    THREE_SIMPLE = "ThreeSimple"
    SIMPLE_PLUS_DOUBLE = "SimplePlusDouble"
    TRIPLE = "Triple"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class CubicProfile:
    """Real roots of ``a3 z + a4 + a5 z^3`` with multiplicities, sorted by ``z``."""

    roots: Tuple[Tuple[float, int], ...]
    kind: CubicKind
    discriminant: float

    @property
    def has_multiple_root(self) -> bool:
        return any(m > 1 for _, m in self.roots)

    @property
    def root_values(self) -> List[float]:
        return [z for z, _ in self.roots]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "roots": [{"z": z, "multiplicity": m} for z, m in self.roots],
            "discriminant": self.discriminant,
        }


def sturm_root_count(coeffs: Sequence[float]) -> int:
    """Number of distinct real roots of a polynomial (highest degree first)."""
    p0 = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if p0.size <= 1:
        return 0
    scale = float(np.max(np.abs(p0)))
    seq = [p0, np.polyder(p0)]
    while seq[-1].size > 1:
        _, rem = np.polydiv(seq[-2], seq[-1])
        rem = np.where(np.abs(rem) < 1e-12 * scale, 0.0, rem)
        rem = np.trim_zeros(rem, "f")
        if rem.size == 0:
            break
        seq.append(-rem)

    def changes(signs: List[float]) -> int:
        nz = [s for s in signs if s != 0]
        return sum(1 for u, v in zip(nz, nz[1:]) if u * v < 0)

    at_pos = [float(np.sign(q[0])) for q in seq]
    at_neg = [float(np.sign(q[0])) * (-1) ** (q.size - 1) for q in seq]
    return changes(at_neg) - changes(at_pos)


def _newton(f, df, z: float, steps: int = 8) -> float:
    for _ in range(steps):
        d = df(z)
        if d == 0:
            break
        step = f(z) / d
        z -= step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return z


def classify_cubic(a3: float, a4: float, a5: float) -> CubicProfile:
    """Root structure of ``a3 z + a4 + a5 z^3``.

    Closed-form roots of the depressed cubic are Newton-polished; a root is
    declared multiple when the discriminant is below ``1e-12`` of its scale.
    """
    a3, a4, a5 = float(a3), float(a4), float(a5)
    disc = -a5 * (4.0 * a3**3 + 27.0 * a5 * a4**2)
    if a5 == 0.0:
        if a3 == 0.0:
            return CubicProfile((), CubicKind.DEGENERATE, disc)
        return CubicProfile(((-a4 / a3, 1),), CubicKind.ONE_SIMPLE, disc)

    def f(z: float) -> float:
        return a5 * z**3 + a3 * z + a4

    def df(z: float) -> float:
        return 3.0 * a5 * z**2 + a3

    p, q = a3 / a5, a4 / a5
    scale = 4.0 * abs(p) ** 3 + 27.0 * q * q
    delta = -(4.0 * p**3 + 27.0 * q * q)
    tol = DISCRIMINANT_RTOL * scale

    if abs(p) <= LINE_TOL and abs(q) <= LINE_TOL:
        return CubicProfile(((0.0, 3),), CubicKind.TRIPLE, disc)

    if abs(delta) <= tol:
        r = -3.0 * q / (2.0 * p)
        if p < 0:
            r = math.copysign(math.sqrt(-p / 3.0), r)
        simple = _newton(f, df, -2.0 * r)
        roots = sorted([(r, 2), (simple, 1)])
        return CubicProfile(tuple(roots), CubicKind.SIMPLE_PLUS_DOUBLE, disc)

    if delta < 0:
        d = q * q / 4.0 + p**3 / 27.0
        big = -q / 2.0 - math.copysign(math.sqrt(d), q)
        c = float(np.cbrt(big))
        z = c - p / (3.0 * c)
        z = _newton(f, df, z)
        profile = CubicProfile(((z, 1),), CubicKind.ONE_SIMPLE, disc)
        _cross_check(profile, a3, a4, a5, delta, tol)
        return profile

    m = 2.0 * math.sqrt(-p / 3.0)
    arg = np.clip(3.0 * q / (p * m), -1.0, 1.0)
    theta = math.acos(float(arg)) / 3.0
    zs = sorted(
        _newton(f, df, m * math.cos(theta - 2.0 * math.pi * k / 3.0)) for k in range(3)
    )
    profile = CubicProfile(tuple((z, 1) for z in zs), CubicKind.THREE_SIMPLE, disc)
    _cross_check(profile, a3, a4, a5, delta, tol)
    return profile


def _cross_check(
    profile: CubicProfile, a3: float, a4: float, a5: float, delta: float, tol: float
) -> None:
    if abs(delta) < 1e3 * tol:
        return
    count = sturm_root_count([a5, 0.0, a3, a4])
    if count != len(profile.roots):
        logger.error(f"❌ Sturm count {count} disagrees with {profile.kind.value}")
        raise InvariantViolation(
            "closed-form roots disagree with the Sturm count",
            {"coefficients": (a3, a4, a5), "sturm": count, "kind": profile.kind.value},
        )


# ---------------------------------------------------------------------------
# Singularities
# ---------------------------------------------------------------------------


def _reduced_profile(param: FamilyParameter) -> Tuple[float, float, float, float]:
    """``(alpha, beta, c3, c4)`` with ``p/a0 = (y0+alpha)^2 - (y1-beta)^2 + a5 y2^3 + c3 y2 + c4``."""
    a0, a1, a2, a3, a4 = param.proj.a
    alpha = a1 / (2.0 * a0)
    beta = a2 / (2.0 * a0)
    c3 = a3 / a0
    c4 = a4 / a0 - alpha * alpha + beta * beta
    return alpha, beta, c3, c4


def is_singular_line(param: FamilyParameter) -> bool:
    """True when the zero set is a pair of planes meeting along a line."""
    a0 = param.proj.a[0]
    if a0 == 0.0 or param.a5 != 0.0:
        return False
    _, _, c3, c4 = _reduced_profile(param)
    return abs(c3) <= LINE_TOL and abs(c4) <= LINE_TOL


def _singular_candidates(param: FamilyParameter) -> List[np.ndarray]:
    """All isolated singular points in R^3, ignoring the ball."""
    if param.z_power != 3:
        raise PreconditionError("singular points are defined for the cubic family only")
    a0 = param.proj.a[0]
    if a0 == 0.0:
        return []
    alpha, beta, c3, c4 = _reduced_profile(param)
    if param.a5 == 0.0:
        if abs(c3) <= LINE_TOL and abs(c4) <= LINE_TOL:
            line_dist = math.hypot(alpha, beta)
            raise SingularLine(
                "singular set is the line where two planes meet",
                {"distance_to_origin": line_dist},
            )
        return []
    profile = classify_cubic(c3, c4, param.a5)
    q = param.rot.matrix
    return [
        q.T @ np.array([-alpha, beta, z])
        for z, mult in profile.roots
        if mult > 1
    ]


def singular_points(param: AnyParameter) -> List[np.ndarray]:
    """Points of the closed unit ball where ``p = 0`` and ``grad p = 0``.

    Raises ``SingularLine`` when the singular set inside the ball is a line.
    """
    if isinstance(param, Phi5Parameter):
        param = param.to_family()
    try:
        candidates = _singular_candidates(param)
    except SingularLine as exc:
        if exc.details["distance_to_origin"] <= 1.0:
            raise
        return []
    return [x for x in candidates if float(np.linalg.norm(x)) <= 1.0 + 1e-12]


# ---------------------------------------------------------------------------
# Quotient representatives
# ---------------------------------------------------------------------------


def _orbit_key(param: FamilyParameter):
    return (
        tuple(round(c, 12) for c in param.proj.a),
        tuple(round(c, 12) for c in param.rot.q),
    )


def quotient_representative(param: FamilyParameter) -> FamilyParameter:
    """Lexicographically smallest of the four D2 images of *param*."""
    return min((d2_act(g, param) for g in D2_ELEMENTS), key=_orbit_key)
