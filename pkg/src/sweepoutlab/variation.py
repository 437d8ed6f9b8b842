"""Mean curvature, first variation and the enlarged domain Omega.

The translated cubic ``Σ_s = {(x-b1)^2 - (y-b2)^2 + s q(z) = 0}`` with
``q(z) = b3 z + b4 + b5 z^3`` is, slice by slice, a hyperbola
``u^2 - v^2 = -s q(z)``.  Each slice splits into four half-branches labelled by
their asymptotic direction ``(±1, ±1)`` and parametrized by
``θ >= 0``:

    (ex κ cosh θ, ey κ sinh θ)   if -s q(z) >= 0
    (ex κ sinh θ, ey κ cosh θ)   otherwise,      κ = sqrt(s |q(z)|).

On that chart the area element is ``|∇p| / 2 dθ dz`` and every point is on
the surface exactly, so areas and surface integrals keep full accuracy in the
thin neck of width ``sqrt(s |q|)`` where a uniform grid cannot.  The boundary
integrals use the midpoint rule on the boundary polyline traced from the same
chart.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from . import family_core as fc
from .exceptions import (
    ConormalDegenerate,
    InvariantViolation,
    NearSingular,
    PreconditionError,
)
from .family_core import AnyParameter, Phi5Parameter
from .surface_mesh import AreaEstimate, DomainKind, DomainSpec

__all__ = [
    "Phi5Parameter",
    "OmegaDomain",
    "VariationBreakdown",
    "FiniteDifference",
    "omega_radius",
    "build_omega",
    "mean_curvature",
    "deformation_field",
    "sheet_area",
    "variation_integrals",
    "first_variation",
    "finite_diff_area",
    "sample_admissible",
    "DEFAULT_EPS1",
    "DEFAULT_EPS2",
    "DEFAULT_C_DOUBLE_PRIME",
]

logger = logging.getLogger("sweepoutlab.variation")

DEFAULT_EPS1 = 1e-2
DEFAULT_EPS2 = 1e-4
DEFAULT_C_DOUBLE_PRIME = 10.0
S3_RADIUS = 0.25
CAP_MARGIN = 1e-3
GRADIENT_FLOOR = 1e-10
CONORMAL_TOL = 1e-8

KAPPA_FLOOR = 1e-12
_ETA_SAMPLES = 64
_Z_SCAN = 2001
_BISECT_STEPS = 60
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
_HALF_BRANCHES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


# ---------------------------------------------------------------------------
# Omega
# ---------------------------------------------------------------------------


def _blend(u: np.ndarray) -> np.ndarray:
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _blend_prime(u: np.ndarray) -> np.ndarray:
    return 30.0 * u * u * (1.0 - u) ** 2


def omega_radius(t: float) -> float:
    """Radius ``R = 20 sqrt(t)`` of the flat cylinder S1."""
    return 20.0 * math.sqrt(t)


@dataclass(frozen=True, eq=False)
class OmegaDomain:
    """Unit ball with flat polar bumps over the cylinder S2 around ``(b1, b2)``.

    Over the disk of radius ``2R`` about the axis the two polar caps are
    replaced by the graphs ``±g`` with

        g = c + (f - c) W((r - R) / R),   W(u) = 10u^3 - 15u^4 + 6u^5,

    ``f = sqrt(1 - x^2 - y^2)`` the sphere height and ``c`` the largest
    sphere height over that disk plus ``1e-3 t``.  ``g`` is constant ``c`` for
    ``r <= R`` and agrees with ``f`` to second order at ``r = 2R``.  The south
    bump mirrors the north one.
    """

    b1: float
    b2: float
    t: float
    R: float
    c: float
    eps1: float = DEFAULT_EPS1
    eps2: float = DEFAULT_EPS2
    c_double_prime: float = DEFAULT_C_DOUBLE_PRIME
    blend_kind: str = "quintic-hermite"
    max_gradient: float = float("nan")

    @property
    def extent(self) -> float:
        return max(1.0, self.c)

    @property
    def gradient_bound(self) -> float:
        """``C''(2 eps1 + 40 sqrt(eps2))``."""
        return self.c_double_prime * (2.0 * self.eps1 + 40.0 * math.sqrt(self.eps2))

    def axis_distance(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0] - self.b1, x[..., 1] - self.b2)

    def region(self, x: np.ndarray) -> np.ndarray:
        """1 inside S1, 2 in S2 \\ S1, 3 in S3 \\ S2, 4 outside S3."""
        r = self.axis_distance(x)
        return np.select(
            [r <= self.R, r <= 2.0 * self.R, r <= S3_RADIUS], [1, 2, 3], default=4
        )

    def sphere_height(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return np.sqrt(np.clip(1.0 - xy[..., 0] ** 2 - xy[..., 1] ** 2, 0.0, None))

    def _blend_terms(self, xy: np.ndarray):
        xy = np.asarray(xy, dtype=float)
        du = xy[..., 0] - self.b1
        dv = xy[..., 1] - self.b2
        r = np.hypot(du, dv)
        u = np.clip((r - self.R) / self.R, 0.0, 1.0)
        return du, dv, r, u

    def height(self, xy: np.ndarray) -> np.ndarray:
        """Top of Omega above ``xy``; equals the sphere height outside S2."""
        f = self.sphere_height(xy)
        _, _, _, u = self._blend_terms(xy)
        return self.c + (f - self.c) * _blend(u)

    def height_gradient(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        f = self.sphere_height(xy)
        du, dv, r, u = self._blend_terms(xy)
        safe_f = np.maximum(f, 1e-300)
        grad_f = -xy[..., :2] / safe_f[..., None]
        w = _blend(u)
        wp = np.where((u > 0) & (u < 1), _blend_prime(u), 0.0)
        safe_r = np.maximum(r, 1e-300)
        grad_u = np.stack([du, dv], axis=-1) / (safe_r * self.R)[..., None]
        return w[..., None] * grad_f + ((f - self.c) * wp)[..., None] * grad_u

    def level(self, x: np.ndarray) -> np.ndarray:
        """Negative inside Omega: ``z^2 - g^2`` over S2, ``|x|^2 - 1`` elsewhere."""
        x = np.asarray(x, dtype=float)
        r = self.axis_distance(x)
        bump = x[..., 2] ** 2 - self.height(x[..., :2]) ** 2
        sphere = np.sum(x * x, axis=-1) - 1.0
        return np.where(r < 2.0 * self.R, bump, sphere)

    def level_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = self.axis_distance(x)
        g = self.height(x[..., :2])
        gg = self.height_gradient(x[..., :2])
        bump = np.concatenate([-2.0 * g[..., None] * gg, 2.0 * x[..., 2:3]], axis=-1)
        return np.where((r < 2.0 * self.R)[..., None], bump, 2.0 * x)

    def normal(self, x: np.ndarray) -> np.ndarray:
        """Outward unit normal ``w`` of the boundary."""
        g = self.level_gradient(x)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "b1": self.b1,
            "b2": self.b2,
            "t": self.t,
            "R": self.R,
            "c": self.c,
            "blend_kind": self.blend_kind,
            "max_gradient": self.max_gradient,
            "gradient_bound": self.gradient_bound,
        }


def build_omega(
    b1: float,
    b2: float,
    t: float,
    eps1: float = DEFAULT_EPS1,
    eps2: float = DEFAULT_EPS2,
    c_double_prime: float = DEFAULT_C_DOUBLE_PRIME,
    samples: int = 100,
) -> OmegaDomain:
    """Construct Omega for axis ``(b1, b2)`` and cap scale ``t``.

    Invariants are checked on a ``samples x samples`` polar grid around the
    axis; any failure raises ``InvariantViolation``.
    """
    if not 0.0 < t < eps2:
        raise PreconditionError("t must lie in (0, eps2)", {"t": t, "eps2": eps2})
    if abs(b1) >= eps1 or abs(b2) >= eps1:
        raise PreconditionError(
            "(b1, b2) must lie in (-eps1, eps1)^2", {"b1": b1, "b2": b2, "eps1": eps1}
        )
    radius = omega_radius(t)
    if 2.0 * radius >= S3_RADIUS:
        raise PreconditionError(
            "S2 must fit inside S3 (2R < 1/4)", {"t": t, "R": radius}
        )
    rho = max(0.0, math.hypot(b1, b2) - 2.0 * radius)
    c = math.sqrt(1.0 - rho * rho) + CAP_MARGIN * t
    omega = OmegaDomain(b1, b2, t, radius, c, eps1, eps2, c_double_prime)

    rr = np.linspace(0.0, 2.5 * radius, samples)
    aa = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    r_grid, a_grid = np.meshgrid(rr, aa, indexing="ij")
    xy = np.stack([b1 + r_grid * np.cos(a_grid), b2 + r_grid * np.sin(a_grid)], axis=-1)
    g = omega.height(xy)
    f = omega.sphere_height(xy)
    grad = np.linalg.norm(omega.height_gradient(xy), axis=-1)

    problems: Dict[str, float] = {}
    if np.min(g - f) < -1e-14:
        problems["min(g - f)"] = float(np.min(g - f))
    flat = r_grid <= radius
    if np.max(grad[flat]) > 1e-12:
        problems["max |grad g| on S1"] = float(np.max(grad[flat]))
    outside = r_grid >= 2.0 * radius
    if np.any(outside) and np.max(np.abs(g - f)[outside]) > 1e-14:
        problems["max |g - f| outside S2"] = float(np.max(np.abs(g - f)[outside]))
    inner = r_grid <= 2.0 * radius
    max_grad = float(np.max(grad[inner]))
    if max_grad > omega.gradient_bound:
        problems["max |grad g| on S2"] = max_grad
    if problems:
        raise InvariantViolation("Omega invariants failed", problems)

    logger.debug(f"Omega built: R={radius:.4g}, c={c:.12f}, max|∇g|={max_grad:.3g}")
    return replace(omega, max_gradient=max_grad)


# ---------------------------------------------------------------------------
# Curvature and deformation
# ---------------------------------------------------------------------------


def mean_curvature(param: AnyParameter, x) -> float:
    """``H = (∇p Hess ∇p^T - |∇p|^2 Δp) / |∇p|^3`` with normal ``∇p / |∇p|``."""
    g = np.asarray(fc.gradient(param, x), dtype=float)
    norm = float(np.linalg.norm(g))
    if norm <= GRADIENT_FLOOR:
        raise NearSingular("gradient vanishes, normal undefined", {"grad_norm": norm})
    hess = np.asarray(fc.hessian(param, x), dtype=float)
    return float((g @ hess @ g - norm * norm * np.trace(hess)) / norm**3)


def deformation_field(param: Phi5Parameter, x) -> np.ndarray:
    """``V = -(∂_s p / |∇p|^2) ∇p``, so that ``∂_s p + ∇p · V = 0``."""
    g = np.asarray(fc.gradient(param, x), dtype=float)
    g2 = float(g @ g)
    if math.sqrt(g2) <= GRADIENT_FLOOR:
        raise NearSingular("gradient vanishes, deformation undefined", {"grad_norm": math.sqrt(g2)})
    return -(float(fc.ds_partial(param, x)) / g2) * g


# ---------------------------------------------------------------------------
# Hyperbola-slice chart
# ---------------------------------------------------------------------------


def _kappa_and_sign(param: Phi5Parameter, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    m = -param.s * param.profile(z)
    return np.maximum(np.sqrt(np.abs(m)), KAPPA_FLOOR), m >= 0


def _chart(param: Phi5Parameter, ex: int, ey: int, z, theta) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    theta = np.asarray(theta, dtype=float)
    kappa, pos = _kappa_and_sign(param, z)
    ch, sh = kappa * np.cosh(theta), kappa * np.sinh(theta)
    u = ex * np.where(pos, ch, sh)
    v = ey * np.where(pos, sh, ch)
    zz = np.broadcast_to(z, u.shape)
    return np.stack([param.b1 + u, param.b2 + v, zz], axis=-1)


def _bisect(param, domain, ex, ey, z, a, b, steps: int = _BISECT_STEPS) -> np.ndarray:
    """Crossing of ``∂domain`` between chart angles ``a`` (inside) and ``b`` (outside)."""
    a, b = a.copy(), b.copy()
    for _ in range(steps):
        mid = 0.5 * (a + b)
        ins = domain.level(_chart(param, ex, ey, z, mid)) < 0
        a = np.where(ins, mid, a)
        b = np.where(ins, b, mid)
    return 0.5 * (a + b)


def _eta_grid(param: Phi5Parameter, domain: DomainSpec) -> np.ndarray:
    reach = 2.0 * (domain.extent + math.hypot(param.b1, param.b2)) + 1.0
    return np.linspace(0.0, reach, _ETA_SAMPLES)


def _inside_interval(
    param: Phi5Parameter, domain: DomainSpec, ex: int, ey: int, z: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chart angles ``[θ_in, θ_out]`` of the first inside stretch of a half-branch."""
    z = np.asarray(z, dtype=float)
    kappa, _ = _kappa_and_sign(param, z)
    theta = np.arcsinh(_eta_grid(param, domain)[None, :] / kappa[:, None])
    inside = domain.level(_chart(param, ex, ey, z[:, None], theta)) < 0
    meets = inside.any(axis=1)
    idx = np.arange(theta.shape[1])
    first = np.argmax(inside, axis=1)
    after = ~inside & (idx[None, :] > first[:, None])
    last = np.argmax(after, axis=1)
    last = np.where(after.any(axis=1), last, theta.shape[1] - 1)
    rows = np.arange(len(z))

    theta_in = np.zeros(len(z))
    entering = meets & (first > 0)
    if np.any(entering):
        r = rows[entering]
        theta_in[entering] = _bisect(
            param, domain, ex, ey, z[r], theta[r, first[r]], theta[r, first[r] - 1]
        )
    theta_out = np.zeros(len(z))
    if np.any(meets):
        r = rows[meets]
        theta_out[meets] = _bisect(
            param, domain, ex, ey, z[r], theta[r, last[r] - 1], theta[r, last[r]]
        )
    return theta_in, theta_out, meets


def _meets(param, domain, ex, ey, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    kappa, _ = _kappa_and_sign(param, z)
    theta = np.arcsinh(_eta_grid(param, domain)[None, :] / kappa[:, None])
    return np.any(domain.level(_chart(param, ex, ey, z[:, None], theta)) < 0, axis=1)


def _breakpoints(param: Phi5Parameter, domain: DomainSpec, ex: int, ey: int) -> np.ndarray:
    top = domain.extent
    points = {-top, top}
    if param.s > 0:
        for z0 in fc.classify_cubic(param.b3, param.b4, param.b5).root_values:
            if -top < z0 < top:
                points.add(float(z0))
    grid = np.linspace(-top, top, _Z_SCAN)
    flags = _meets(param, domain, ex, ey, grid)
    for k in np.flatnonzero(flags[1:] != flags[:-1]):
        lo, hi = grid[k], grid[k + 1]
        lo_flag = flags[k]
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if _meets(param, domain, ex, ey, mid)[0] == lo_flag:
                lo = mid
            else:
                hi = mid
        points.add(0.5 * (lo + hi))
    return np.array(sorted(points))


def _segments(param, domain, ex, ey) -> List[Tuple[float, float]]:
    bp = _breakpoints(param, domain, ex, ey)
    out = []
    for za, zb in zip(bp[:-1], bp[1:]):
        if zb - za > 1e-14 and _meets(param, domain, ex, ey, 0.5 * (za + zb))[0]:
            out.append((float(za), float(zb)))
    return out


def _panel_rule(panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite 6-point Gauss-Legendre on [0, 1]."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class _SheetRule:
    points: np.ndarray
    weights: np.ndarray


def _sheet_rule(param: Phi5Parameter, domain: DomainSpec, mesh_n: int) -> _SheetRule:
    """Quadrature nodes on ``Σ_s ∩ domain`` with area weights."""
    panels = max(2, mesh_n // 8)
    wn, ww = _panel_rule(panels)
    tn, tw = _panel_rule(panels)
    pts: List[np.ndarray] = []
    wts: List[np.ndarray] = []
    for ex, ey in _HALF_BRANCHES:
        for za, zb in _segments(param, domain, ex, ey):
            z = za + (zb - za) * _blend(wn)
            dz = (zb - za) * _blend_prime(wn) * ww
            th_in, th_out, meets = _inside_interval(param, domain, ex, ey, z)
            span = np.where(meets, th_out - th_in, 0.0)
            theta = th_in[:, None] + span[:, None] * tn[None, :]
            x = _chart(param, ex, ey, z[:, None], theta)
            grad = fc.gradient(param, x)
            w = dz[:, None] * span[:, None] * tw[None, :] * 0.5 * np.linalg.norm(grad, axis=-1)
            pts.append(x.reshape(-1, 3))
            wts.append(w.ravel())
    if not pts:
        return _SheetRule(np.zeros((0, 3)), np.zeros(0))
    return _SheetRule(np.vstack(pts), np.concatenate(wts))


def _sheet_area_value(param: Phi5Parameter, domain: DomainSpec, mesh_n: int) -> float:
    return float(np.sum(_sheet_rule(param, domain, mesh_n).weights))


def _as_domain(domain: Union["OmegaDomain", DomainSpec, None]) -> DomainSpec:
    if domain is None:
        return DomainSpec.unit_ball()
    if isinstance(domain, OmegaDomain):
        return DomainSpec.from_omega(domain)
    return domain


def sheet_area(
    param: Phi5Parameter,
    domain: Union[OmegaDomain, DomainSpec, None] = None,
    mesh_n: int = 64,
) -> AreaEstimate:
    """Area of ``Σ_s ∩ domain`` from the hyperbola-slice chart at two resolutions."""
    dom = _as_domain(domain)
    coarse = _sheet_area_value(param, dom, mesh_n)
    fine = _sheet_area_value(param, dom, 2 * mesh_n)
    return AreaEstimate(fine, abs(fine - coarse), (mesh_n, 2 * mesh_n))


# ---------------------------------------------------------------------------
# Boundary polyline
# ---------------------------------------------------------------------------


def _boundary_chords(
    param: Phi5Parameter, domain: DomainSpec, mesh_n: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Chord midpoints and lengths of ``∂Σ_s`` at 4x the sheet resolution."""
    nodes = 4 * 6 * max(2, mesh_n // 8)
    w = np.linspace(0.0, 1.0, nodes + 1)
    omega = domain.omega if domain.kind is DomainKind.OMEGA else None
    mids: List[np.ndarray] = []
    lengths: List[np.ndarray] = []

    def add(polyline: np.ndarray) -> None:
        mids.append(0.5 * (polyline[1:] + polyline[:-1]))
        lengths.append(np.linalg.norm(np.diff(polyline, axis=0), axis=1))

    for ex, ey in _HALF_BRANCHES:
        segments = _segments(param, domain, ex, ey)
        for za, zb in segments:
            pad = 1e-12 * (zb - za)
            z = za + pad + (zb - za - 2 * pad) * _blend(w)
            th_in, th_out, meets = _inside_interval(param, domain, ex, ey, z)
            if np.any(th_in > 0) or not np.all(meets):
                raise PreconditionError(
                    "half-branch enters the domain away from its vertex",
                    {"branch": (ex, ey), "segment": (za, zb)},
                )
            add(_chart(param, ex, ey, z, th_out))
        if omega is None:
            continue
        for top in (omega.c, -omega.c):
            if not any(abs(end - top) < 1e-9 for seg in segments for end in seg):
                continue
            kappa, _ = _kappa_and_sign(param, np.array(top))
            eta_r = math.sqrt(max(omega.R**2 - float(kappa) ** 2, 0.0) / 2.0)
            theta_r = math.asinh(eta_r / float(kappa))
            arc = np.linspace(0.0, theta_r, nodes + 1)
            add(_chart(param, ex, ey, np.full_like(arc, top), arc))
    if not mids:
        return np.zeros((0, 3)), np.zeros(0)
    return np.vstack(mids), np.concatenate(lengths)


def _boundary_density(param: Phi5Parameter, domain: DomainSpec, x: np.ndarray) -> np.ndarray:
    """``(n·w)(∂_s p/|∇p|)/(ν·w)``, the normal speed of the boundary along ∂domain."""
    grad = fc.gradient(param, x)
    dn = domain.level_gradient(x)
    w = dn / np.linalg.norm(dn, axis=-1, keepdims=True)
    gnorm = np.linalg.norm(grad, axis=-1)
    gw = np.sum(grad * w, axis=-1)
    tang = np.sqrt(np.clip(gnorm * gnorm - gw * gw, 0.0, None))
    nu_w = tang / gnorm
    if len(nu_w) and float(np.min(nu_w)) < CONORMAL_TOL:
        k = int(np.argmin(nu_w))
        raise ConormalDegenerate(
            "surface meets the domain boundary tangentially",
            {"point": x[k].tolist(), "nu_dot_w": float(nu_w[k])},
        )
    return param.profile(x[..., 2]) * gw / (gnorm * tang)


# ---------------------------------------------------------------------------
# First variation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteDifference:
    value: float
    error: float
    step: float


@dataclass(frozen=True)
class VariationBreakdown:
    """The six terms of dA/ds over ``Σ_s ∩ Omega`` and a finite-difference check."""

    I1: float
    I2: float
    I3: float
    I4: float
    I5: float
    I6: float
    total: float
    fd_total: float
    fd_step: float
    error: float = 0.0
    boundary_total: float = 0.0
    diagnostics: Dict[str, float] = field(default_factory=dict)
    param: Optional[Phi5Parameter] = None

    @property
    def terms(self) -> Tuple[float, ...]:
        return (self.I1, self.I2, self.I3, self.I4, self.I5, self.I6)

    def to_dict(self) -> dict:
        out = {f"I{k}": v for k, v in enumerate(self.terms, start=1)}
        out.update(
            total=self.total,
            fd_total=self.fd_total,
            fd_step=self.fd_step,
            error=self.error,
            diagnostics=dict(self.diagnostics),
        )
        if self.param is not None:
            out["param"] = self.param.to_dict()
        return out


def _check_smooth(param: Phi5Parameter, domain: DomainSpec) -> None:
    for point in fc._singular_candidates(param.to_family()):
        if float(domain.signed_distance(point)) <= 0.0:
            raise PreconditionError(
                "Σ_s has a singular point inside the domain", {"point": point.tolist()}
            )


def variation_integrals(
    param: Phi5Parameter, omega: OmegaDomain, mesh_n: int = 64
) -> Dict[str, float]:
    """``I1 ... I6`` at one resolution, plus bookkeeping diagnostics."""
    domain = DomainSpec.from_omega(omega)
    s = param.s
    rule = _sheet_rule(param, domain, mesh_n)
    x = rule.points
    grad = fc.gradient(param, x)
    g2 = np.sum(grad * grad, axis=-1)
    q = param.profile(x[:, 2])
    rho2 = (x[:, 0] - param.b1) ** 2 + (x[:, 1] - param.b2) ** 2
    i1 = float(np.sum(rule.weights * (-8.0 * s * q * q / (g2 * g2))))
    i2 = float(
        np.sum(rule.weights * (-24.0 * param.b5 * s * x[:, 2] * q * rho2 / (g2 * g2)))
    )
    norm_ok = bool(np.all(g2 >= 4.0 * s * np.abs(q) * (1.0 - 1e-12)))

    mids, lengths = _boundary_chords(param, domain, mesh_n)
    density = _boundary_density(param, domain, mids) * lengths
    region = omega.region(mids)
    parts = {f"I{k + 2}": float(np.sum(density[region == k])) for k in (1, 2, 3, 4)}

    normals = fc.gradient(param, mids)
    normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
    nw = np.abs(np.sum(normals * omega.normal(mids), axis=-1))

    def region_max(k: int) -> float:
        sel = region == k
        return float(np.max(nw[sel])) if np.any(sel) else 0.0

    out = {"I1": i1, "I2": i2, **parts}
    out["boundary_total"] = float(np.sum(density))
    out["norm_check"] = float(norm_ok)
    out["max_nw_S2"] = region_max(2)
    out["max_nw_S3"] = region_max(3)
    return out


def finite_diff_area(
    param: Phi5Parameter,
    omega: Union[OmegaDomain, DomainSpec],
    s: Optional[float] = None,
    h: Optional[float] = None,
    mesh_n: int = 64,
) -> FiniteDifference:
    """Central difference ``(A(s+h) - A(s-h)) / 2h`` of the sheet area.

    The error adds the resolution gap and the Richardson estimate of the
    truncation error from the step ``2h``.
    """
    s = param.s if s is None else s
    h = s / 10.0 if h is None else h
    if s - h <= 0:
        raise PreconditionError("need s - h > 0", {"s": s, "h": h})
    domain = _as_domain(omega)

    def diff(step: float, n: int) -> float:
        hi = _sheet_area_value(param.with_s(s + step), domain, n)
        lo = _sheet_area_value(param.with_s(s - step), domain, n)
        return (hi - lo) / (2.0 * step)

    coarse = diff(h, mesh_n)
    fine = diff(h, 2 * mesh_n)
    error = abs(fine - coarse)
    if s - 2 * h > 0:
        error += abs(fine - diff(2 * h, 2 * mesh_n)) / 3.0
    return FiniteDifference(fine, error, h)


def first_variation(
    param: Phi5Parameter,
    omega: OmegaDomain,
    mesh_n: int = 64,
    fd_step: Optional[float] = None,
) -> VariationBreakdown:
    """Analytic dA/ds of ``Σ_s ∩ Omega`` split into ``I1 ... I6``.

    ``I1, I2`` are the interior mean-curvature terms, ``I3 ... I6`` the boundary
    term split by the cylinders S1, S2, S3 of radii ``R, 2R, 1/4``.
    """
    if not 0.0 < param.s <= omega.t:
        raise PreconditionError("need 0 < s <= t", {"s": param.s, "t": omega.t})
    _check_smooth(param, DomainSpec.from_omega(omega))

    coarse = variation_integrals(param, omega, mesh_n)
    fine = variation_integrals(param, omega, 2 * mesh_n)
    terms = [fine[f"I{k}"] for k in range(1, 7)]
    total = sum(terms)
    total_coarse = sum(coarse[f"I{k}"] for k in range(1, 7))
    fd = finite_diff_area(param, omega, param.s, fd_step, mesh_n)

    diagnostics = {
        "norm_check": fine["norm_check"],
        "max_nw_S2": fine["max_nw_S2"],
        "max_nw_S3": fine["max_nw_S3"],
        "fd_error": fd.error,
        "resolution_gap": abs(total - total_coarse),
    }
    logger.debug(
        f"first variation s={param.s:.3g}: total={total:.6g}, fd={fd.value:.6g}"
    )
    return VariationBreakdown(
        *terms,
        total=total,
        fd_total=fd.value,
        fd_step=fd.step,
        error=abs(total - total_coarse) + fd.error,
        boundary_total=fine["boundary_total"],
        diagnostics=diagnostics,
        param=param,
    )


# ---------------------------------------------------------------------------
# Admissible sampling
# ---------------------------------------------------------------------------


def sample_admissible(
    rng: np.random.Generator,
    eps1: float = DEFAULT_EPS1,
    eps2: float = DEFAULT_EPS2,
    t_min: float = 1e-7,
    t: Optional[float] = None,
) -> Phi5Parameter:
    """Random ``(b, direction, t, s)`` satisfying the smallness conditions.

    Directions whose profile has a root with ``|q'| < 0.05`` within ``|z| <= 1.1``
    are rejected, which keeps ``Σ_s`` uniformly smooth.
    """
    t_max = min(eps2, 0.9 / 160.0**2)
    while True:
        radius = 0.9 * eps1 * math.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2.0 * math.pi)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        if direction[2] < 0:
            direction = -direction
        b3, b4, b5 = (float(v) for v in direction)
        profile = fc.classify_cubic(b3, b4, b5)
        if any(
            abs(z) <= 1.1 and abs(b3 + 3.0 * b5 * z * z) < 0.05
            for z in profile.root_values
        ):
            continue
        t_val = t if t is not None else math.exp(rng.uniform(math.log(t_min), math.log(t_max)))
        s = t_val * rng.uniform(0.2, 0.8)
        return Phi5Parameter(
            radius * math.cos(angle), radius * math.sin(angle), b3, b4, b5, s, t_val
        )
