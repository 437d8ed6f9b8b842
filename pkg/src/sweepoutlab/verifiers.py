"""Sampling campaigns over the family and their pass/fail verdicts.

Each campaign builds a list of immutable jobs, hands them to
``utils.parallel_map`` and reduces the plain-dict records in the main process.
A verdict is always recomputable from the records of its ``ScanReport``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import minimum_filter1d
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation
from scipy.stats import norm, qmc

from . import family_core as fc
from . import surface_mesh as sm
from .exceptions import (
    NonManifoldMesh,
    PreconditionError,
    SingularLine,
    SingularityTooClose,
)
from .family_core import CubicKind, FamilyParameter, Phi5Parameter, Rotation3
from .utils import parallel_map, write_csv, write_json
from .variation import (
    DEFAULT_C_DOUBLE_PRIME,
    DEFAULT_EPS1,
    DEFAULT_EPS2,
    build_omega,
    first_variation,
    sample_admissible,
    sheet_area,
    variation_integrals,
)

__all__ = [
    "ScanReport",
    "ScalingReport",
    "sobol_parameters",
    "projective_distance",
    "scan_global_max",
    "global_max_verdict",
    "scan_width",
    "width_verdict",
    "width_trend",
    "genus_prediction",
    "genus_scan",
    "local_max_experiment",
    "local_max_campaign",
    "cap_cost_scaling",
    "lemma_seven_scaling",
    "lemma_seven_verdict",
    "cubic_window_max",
    "cubic_lemma_search",
    "cubic_lemma_report",
    "phi1_area_profile",
    "appendix_a_campaign",
    "first_variation_campaign",
    "equivariance_campaign",
]

logger = logging.getLogger("sweepoutlab.verifiers")

TWO_PI = 2.0 * math.pi
APEX = (1.0, 0.0, 0.0, 0.0, 0.0)
APEX_RTOL = 1e-3
APEX_EXCLUSION = 0.05
MARGIN_BINS = (0.05, 0.1, 0.2, 0.4, 0.8, math.pi / 2.0)
MAX_WIDTH_A5 = 0.05
LINEAR_TOL = 1e-9
BOUNDARY_BAND = 0.1
DEFAULT_DIRECTION = (0.6, 0.1, 1.0)
DEFAULT_T_LIST = (1e-6, 3e-6, 1e-5, 3e-5)
I2_BOUND = 24.0 * 3.0 * math.pi
SCALING_FLOOR = 1e-300
CUBIC_SAMPLES = 2049
CUBIC_WINDOW = 257
CUBIC_STARTS = np.arange(0, CUBIC_SAMPLES - CUBIC_WINDOW + 1, 4)
CUBIC_X = np.linspace(-0.5, 0.5, CUBIC_SAMPLES)
MESHED_FAILURES = (SingularityTooClose, SingularLine, NonManifoldMesh)
# isolated singular points are meshed through for area
AREA_FAILURES = (SingularLine, NonManifoldMesh)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    """Per-sample records of one campaign plus its verdict."""

    campaign: str
    samples: int
    passed: bool
    columns: Tuple[str, ...]
    records: List[Dict[str, Any]]
    summary: Dict[str, Any] = field(default_factory=dict)
    csv_path: Optional[Path] = None

    def extremes(self, key: str) -> Dict[str, Any]:
        """Max, min and argmax record over the finite values of *key*."""
        rows = [
            r for r in self.records
            if isinstance(r.get(key), (int, float)) and math.isfinite(r[key])
        ]
        if not rows:
            return {}
        best = max(rows, key=lambda r: r[key])
        return {
            "max": best[key],
            "min": min(r[key] for r in rows),
            "argmax": best,
        }

    def pretty(self) -> str:
        verdict = "[green]PASS[/green]" if self.passed else "[red]FAIL[/red]"
        lines = [f"{verdict} {self.campaign}: {self.samples} samples"]
        for key, value in self.summary.items():
            if isinstance(value, (dict, list)):
                continue
            if isinstance(value, float):
                value = f"{value:.6g}"
            lines.append(f"  {key}: {value}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "campaign": self.campaign,
            "samples": self.samples,
            "passed": self.passed,
            "summary": self.summary,
            "csv": self.csv_path.name if self.csv_path else None,
        }

    def write(self, out_dir: Path | str) -> Path:
        """Write ``<campaign>.csv`` and ``<campaign>.json``; returns the JSON path."""
        out = Path(out_dir)
        self.csv_path = write_csv(
            out / f"{self.campaign}.csv",
            self.columns,
            ([r.get(c) for c in self.columns] for r in self.records),
        )
        return write_json(out / f"{self.campaign}.json", self.to_dict())


@dataclass(frozen=True)
class ScalingReport:
    """Geometric-mean curve of one quantity over the ``s`` grid with its log-log fit."""

    quantity: str
    s_values: Tuple[float, ...]
    values: Tuple[float, ...]
    slope: float
    ci_low: float
    ci_high: float
    max_value: float

    def __post_init__(self) -> None:
        if len(self.s_values) < 8:
            raise PreconditionError(
                "a scaling fit needs at least 8 values of s", {"count": len(self.s_values)}
            )
        decades = math.log10(max(self.s_values) / min(self.s_values))
        if decades < 2.0:
            raise PreconditionError(
                "the s grid must span at least 2 decades", {"decades": decades}
            )

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "s": list(self.s_values),
            "values": list(self.values),
            "slope": self.slope,
            "ci95": [self.ci_low, self.ci_high],
            "max_value": self.max_value,
        }


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sobol_parameters(
    count: int,
    seed: int,
    a5: float = 0.0,
    quotient: bool = True,
    include_apex: bool = True,
) -> List[FamilyParameter]:
    """Scrambled Sobol points on RP^4 x SO(3) at fixed ``a5``.

    Nine uniforms go through the normal quantile: five give a direction on
    S^4, four a unit quaternion.  The apex ``[1:0:0:0:0]`` is sample 0 when
    *include_apex* is set.
    """
    if count < 1:
        raise PreconditionError("count must be at least 1", {"count": count})
    sampler = qmc.Sobol(d=9, scramble=True, seed=seed)
    u = sampler.random_base2(max(0, math.ceil(math.log2(count))))
    gauss = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    out: List[FamilyParameter] = []
    if include_apex:
        out.append(FamilyParameter.from_coords(APEX, a5))
    for row in gauss:
        if len(out) >= count:
            break
        quat = row[5:] / np.linalg.norm(row[5:])
        rot = Rotation3.from_quaternion(*quat)
        param = FamilyParameter.from_coords(row[:5], a5, rot)
        out.append(fc.quotient_representative(param) if quotient else param)
    return out


def projective_distance(param: FamilyParameter) -> float:
    """Angle between ``[a]`` and the apex ``[1:0:0:0:0]`` in RP^4."""
    return math.acos(min(1.0, abs(param.proj.a[0])))


def _param_columns(param: FamilyParameter) -> Dict[str, float]:
    x, y, z, w = Rotation.from_matrix(param.rot.matrix).as_quat()
    quat = np.array([w, x, y, z])
    if quat[0] < 0:
        quat = -quat
    row = {f"a{k}": c for k, c in enumerate(param.proj.a)}
    row["a5"] = param.a5
    row.update({f"q{k}": float(v) + 0.0 for k, v in enumerate(quat)})
    return row


PARAM_COLUMNS = ("a0", "a1", "a2", "a3", "a4", "a5", "q0", "q1", "q2", "q3")
AREA_COLUMNS = ("digest",) + PARAM_COLUMNS + ("distance", "area", "error", "status")


def _area_task(job: Tuple[FamilyParameter, int]) -> Dict[str, Any]:
    param, grid_n = job
    row: Dict[str, Any] = {"digest": param.digest(), **_param_columns(param)}
    row.update(distance=projective_distance(param), area=math.nan, error=math.nan, status="ok")
    try:
        est = sm.estimate_area(param, None, grid_n, check_singular=False)
    except AREA_FAILURES as exc:
        row["status"] = type(exc).__name__
        return row
    row.update(area=est.value, error=est.error_bound)
    return row


def _ok(records: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    return [r for r in records if r["status"] == "ok"]


def _status_counts(records: Sequence[Dict[str, Any]]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for r in records:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    return dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# Global maximum at the apex
# ---------------------------------------------------------------------------


def global_max_verdict(records: Sequence[Dict[str, Any]]) -> ScanReport:
    """Margin table of ``2π - area - error`` by distance from the apex.

    Passes when the apex has area ``2π`` within relative ``1e-3`` and every
    distance bin beyond ``0.05`` has a positive minimum gap.
    """
    records = list(records)
    apex = next((r for r in records if r["distance"] == 0.0 and r["status"] == "ok"), None)
    apex_ok = apex is not None and abs(apex["area"] - TWO_PI) <= APEX_RTOL * TWO_PI

    margins = []
    ok = _ok(records)
    for lo, hi in zip(MARGIN_BINS, MARGIN_BINS[1:]):
        gaps = [TWO_PI - r["area"] - r["error"] for r in ok if lo < r["distance"] <= hi]
        margins.append(
            {
                "distance_lo": lo,
                "distance_hi": hi,
                "count": len(gaps),
                "min_gap": min(gaps) if gaps else None,
            }
        )
    gaps_ok = all(m["min_gap"] > 0 for m in margins if m["min_gap"] is not None)
    away = [r for r in ok if r["distance"] > APEX_EXCLUSION]
    best = max(away, key=lambda r: r["area"], default=None)

    summary = {
        "apex_area": apex["area"] if apex else None,
        "apex_ok": apex_ok,
        "max_area_away": best["area"] if best else None,
        "argmax_away": best["digest"] if best else None,
        "margins": margins,
        "status_counts": _status_counts(records),
    }
    return ScanReport(
        "global_max", len(records), bool(apex_ok and gaps_ok), AREA_COLUMNS, records, summary
    )


def scan_global_max(
    samples: int = 10_000, grid_n: int = 64, seed: int = 0, threads: int = 1
) -> ScanReport:
    """Areas of ``a5 = 0`` members on a Sobol grid; the apex must be the strict max."""
    params = sobol_parameters(samples, seed, 0.0)
    records = parallel_map(_area_task, [(p, grid_n) for p in params], threads)
    report = global_max_verdict(records)
    logger.info(
        f"{'✅' if report.passed else '❌'} global max scan: "
        f"apex area {report.summary['apex_area']}, "
        f"max away {report.summary['max_area_away']}"
    )
    return report


# ---------------------------------------------------------------------------
# Width bound
# ---------------------------------------------------------------------------


def scan_width(
    a5: float,
    samples: int = 10_000,
    grid_n: int = 64,
    seed: int = 0,
    threads: int = 1,
) -> ScanReport:
    """Max area over quotient samples at fixed ``a5``; passes iff it stays below ``2π``.

    ``a5 = 0`` is accepted as the negative control: the apex then reaches
    ``2π`` and the verdict fails.
    """
    if not 0.0 <= a5 <= MAX_WIDTH_A5:
        raise PreconditionError("a5 must lie in [0, 0.05]", {"a5": a5})
    params = sobol_parameters(samples, seed, a5)
    records = parallel_map(_area_task, [(p, grid_n) for p in params], threads)
    report = width_verdict(a5, records)
    logger.info(
        f"{'✅' if report.passed else '❌'} width scan a5={a5}: "
        f"max area + error = {report.summary['max_upper']}"
    )
    return report


def width_verdict(a5: float, records: Sequence[Dict[str, Any]]) -> ScanReport:
    """Passes iff every meshed ``area + error`` is below ``2π``.

    Any sample within ``APEX_EXCLUSION`` of the apex that could not be meshed
    fails the verdict.
    """
    records = list(records)
    ok = _ok(records)
    best = max(ok, key=lambda r: r["area"] + r["error"], default=None)
    upper = best["area"] + best["error"] if best else None
    near_apex = [
        r["digest"] for r in records if r["status"] != "ok" and r["distance"] <= APEX_EXCLUSION
    ]
    passed = best is not None and upper < TWO_PI and not near_apex
    summary = {
        "a5": a5,
        "negative_control": a5 == 0.0,
        "max_area": max((r["area"] for r in ok), default=None),
        "max_upper": upper,
        "argmax": best["digest"] if best else None,
        "unmeshed_near_apex": near_apex,
        "status_counts": _status_counts(records),
    }
    return ScanReport(
        f"width_a5_{a5!r}", len(records), bool(passed), AREA_COLUMNS, records, summary
    )


def width_trend(reports: Sequence[ScanReport]) -> Dict[str, Any]:
    """Empirical max area against ``a5``; monotonicity is reported, not asserted."""
    pairs = sorted((r.summary["a5"], r.summary["max_area"]) for r in reports)
    values = [m for _, m in pairs if m is not None]
    return {
        "a5": [a for a, _ in pairs],
        "max_area": [m for _, m in pairs],
        "nonincreasing": all(x >= y for x, y in zip(values, values[1:])),
    }


# ---------------------------------------------------------------------------
# Genus bound
# ---------------------------------------------------------------------------


def genus_prediction(param: FamilyParameter, grid_n: int = 64) -> Tuple[Optional[int], str]:
    """Genus expected from the root structure of the vertical profile.

    Three simple roots whose axis points all sit well inside the ball open a
    handle; roots near the sphere, multiple roots and necks narrower than the
    grid give no prediction.
    """
    a0 = param.proj.a[0]
    if abs(a0) <= LINEAR_TOL:
        return 0, "linear"
    alpha, beta, c3, c4 = fc._reduced_profile(param)
    profile = fc.classify_cubic(c3, c4, param.a5)
    if profile.kind is CubicKind.ONE_SIMPLE:
        return 0, profile.kind.value
    if profile.kind is not CubicKind.THREE_SIMPLE:
        return None, profile.kind.value
    q = param.rot.matrix
    radii = [
        float(np.linalg.norm(q.T @ np.array([-alpha, beta, z]))) for z in profile.root_values
    ]
    if any(abs(r - 1.0) <= BOUNDARY_BAND for r in radii):
        return None, "root near sphere"
    if all(r < 1.0 - BOUNDARY_BAND for r in radii):
        slopes = [abs(3.0 * param.a5 * z * z + c3) for z in profile.root_values]
        if min(slopes) < 4.0 * (2.0 / grid_n):
            return None, "neck below grid"
        return 1, profile.kind.value
    return 0, "roots outside"


GENUS_COLUMNS = ("digest",) + PARAM_COLUMNS + (
    "genus",
    "components",
    "boundary_count",
    "predicted",
    "reason",
    "status",
)


def _genus_task(job: Tuple[FamilyParameter, int]) -> Dict[str, Any]:
    param, grid_n = job
    predicted, reason = genus_prediction(param, grid_n)
    row: Dict[str, Any] = {"digest": param.digest(), **_param_columns(param)}
    row.update(
        genus=None,
        components=None,
        boundary_count=None,
        predicted=predicted,
        reason=reason,
        status="ok",
    )
    try:
        mesh = sm.extract_mesh(param, None, grid_n)
        if mesh.tangential:
            row["status"] = "Tangential"
            return row
        report = sm.topology(mesh)
    except MESHED_FAILURES as exc:
        row["status"] = type(exc).__name__
        return row
    row.update(
        genus=report.total_genus,
        components=len(report.components),
        boundary_count=report.boundary_count,
    )
    return row


def genus_scan(
    a5: float,
    samples: int = 1000,
    grid_n: int = 64,
    seed: int = 0,
    threads: int = 1,
) -> ScanReport:
    """Genus of every smooth quotient sample, checked against ``genus_prediction``."""
    if a5 <= 0.0:
        raise PreconditionError("genus scan needs a5 > 0", {"a5": a5})
    params = sobol_parameters(samples, seed, a5, include_apex=False)
    records = parallel_map(_genus_task, [(p, grid_n) for p in params], threads)
    ok = _ok(records)
    bad_genus = [r for r in ok if r["genus"] not in (0, 1)]
    mismatch = [
        r for r in ok if r["predicted"] is not None and r["predicted"] != r["genus"]
    ]
    histogram: Dict[str, int] = {}
    for r in ok:
        histogram[str(r["genus"])] = histogram.get(str(r["genus"]), 0) + 1
    passed = bool(ok) and not bad_genus and not mismatch
    summary = {
        "a5": a5,
        "evaluated": len(ok),
        "genus_histogram": dict(sorted(histogram.items())),
        "outside_support": len(bad_genus),
        "predictor_mismatches": len(mismatch),
        "unpredicted": sum(1 for r in ok if r["predicted"] is None),
        "status_counts": _status_counts(records),
    }
    logger.info(
        f"{'✅' if passed else '❌'} genus scan a5={a5}: histogram {summary['genus_histogram']}, "
        f"{len(mismatch)} mismatches"
    )
    return ScanReport(
        f"genus_a5_{a5!r}", len(records), passed, GENUS_COLUMNS, records, summary
    )


# ---------------------------------------------------------------------------
# Local maximality near the apex
# ---------------------------------------------------------------------------


def _loglog_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    pairs = [(a, b) for a, b in zip(x, y) if a > 0 and b > 0 and math.isfinite(b)]
    if len(pairs) < 2:
        return None
    lx, ly = np.log([p[0] for p in pairs]), np.log([p[1] for p in pairs])
    return float(np.polyfit(lx, ly, 1)[0])


def cap_cost_scaling(t_values: Sequence[float], bump_excess: Sequence[float]) -> Optional[float]:
    """Log-log slope of the cap cost of the bumps against ``t``; about 1."""
    return _loglog_slope(t_values, bump_excess)


def _s_integral(
    param: Phi5Parameter, omega, t: float, mesh_n: int, nodes: int
) -> Tuple[float, float]:
    """``∫_0^t (dA/ds, I1) ds`` with ``s = t w^2`` and Gauss-Legendre in ``w``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    total = i1 = 0.0
    for u, weight in zip(0.5 * (x + 1.0), 0.5 * w):
        parts = variation_integrals(param.with_s(t * u * u), omega, mesh_n)
        jac = weight * 2.0 * t * u
        total += jac * sum(parts[f"I{k}"] for k in range(1, 7))
        i1 += jac * parts["I1"]
    return total, i1


LOCAL_MAX_COLUMNS = (
    "b1",
    "b2",
    "b3",
    "b4",
    "b5",
    "t",
    "direct",
    "direct_error",
    "cap",
    "cap_error",
    "integral",
    "integral_error",
    "integral_I1",
    "omega_excess",
    "omega_error",
    "bump_excess",
    "passed",
)


def _local_max_row(
    param: Phi5Parameter, omega, mesh_n: int, quad_nodes: int
) -> Dict[str, Any]:
    t = param.t
    direct = sheet_area(param, None, mesh_n)
    on_omega = sheet_area(param, omega, mesh_n)
    cap = sheet_area(param.with_s(0.0), omega, mesh_n)
    integral, i1 = _s_integral(param, omega, t, mesh_n, quad_nodes)
    coarse, _ = _s_integral(param, omega, t, mesh_n, max(2, quad_nodes // 2))
    int_err = abs(integral - coarse)

    diff = direct.value - TWO_PI
    cap_cost = cap.value - TWO_PI
    excess = on_omega.value - TWO_PI
    bracket = cap_cost + integral
    tol = cap.error_bound + on_omega.error_bound + int_err
    passed = (
        diff + direct.error_bound < 0.0
        and diff <= bracket + tol + direct.error_bound
        and abs(bracket - excess) <= tol
    )
    row = {k: getattr(param, k) for k in ("b1", "b2", "b3", "b4", "b5", "t")}
    row.update(
        direct=diff,
        direct_error=direct.error_bound,
        cap=cap_cost,
        cap_error=cap.error_bound,
        integral=integral,
        integral_error=int_err,
        integral_I1=i1,
        omega_excess=excess,
        omega_error=on_omega.error_bound,
        bump_excess=cap_cost + math.pi * (param.b1**2 + param.b2**2),
        passed=bool(passed),
    )
    return row


def local_max_experiment(
    b1: float,
    b2: float,
    direction: Sequence[float] = DEFAULT_DIRECTION,
    t_list: Sequence[float] = DEFAULT_T_LIST,
    eps1: float = DEFAULT_EPS1,
    eps2: float = DEFAULT_EPS2,
    c_double_prime: float = DEFAULT_C_DOUBLE_PRIME,
    mesh_n: int = 64,
    quad_nodes: int = 16,
) -> ScanReport:
    """Area change of ``Σ_t`` against the cap cost plus ``∫_0^t dA/ds``.

    For each ``t`` the direct difference ``area(Σ_t ∩ B) - 2π`` must be
    negative and bounded by the decomposition over Omega, which in turn must
    agree with ``area(Σ_t ∩ Omega) - 2π``.
    """
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,) or not np.any(d):
        raise PreconditionError("direction must be a nonzero 3-vector")
    d = d / np.linalg.norm(d)
    if d[2] < 0:
        raise PreconditionError("direction needs b5 >= 0", {"b5": float(d[2])})
    rows = []
    for t in t_list:
        omega = build_omega(b1, b2, t, eps1, eps2, c_double_prime)
        param = Phi5Parameter(b1, b2, float(d[0]), float(d[1]), float(d[2]), t, t)
        rows.append(_local_max_row(param, omega, mesh_n, quad_nodes))
    ts = [r["t"] for r in rows]
    summary = {
        "cap_cost_slope": cap_cost_scaling(ts, [r["bump_excess"] for r in rows]),
        "integral_I1_slope": _loglog_slope(ts, [abs(r["integral_I1"]) for r in rows]),
        "max_direct": max(r["direct"] for r in rows),
    }
    passed = all(r["passed"] for r in rows)
    logger.info(f"{'✅' if passed else '❌'} local max at b=({b1:.3g}, {b2:.3g}): {summary}")
    return ScanReport("local_max", len(rows), passed, LOCAL_MAX_COLUMNS, rows, summary)


def _local_max_task(job: Tuple[Phi5Parameter, float, float, float, int, int]) -> Dict[str, Any]:
    param, eps1, eps2, c_double_prime, mesh_n, quad_nodes = job
    omega = build_omega(param.b1, param.b2, param.t, eps1, eps2, c_double_prime)
    return _local_max_row(param.with_s(param.t), omega, mesh_n, quad_nodes)


def local_max_campaign(
    samples: int = 20,
    seed: int = 0,
    eps1: float = DEFAULT_EPS1,
    eps2: float = DEFAULT_EPS2,
    c_double_prime: float = DEFAULT_C_DOUBLE_PRIME,
    mesh_n: int = 64,
    quad_nodes: int = 16,
    threads: int = 1,
) -> ScanReport:
    """``local_max_experiment`` on random admissible ``(b, direction, t)``."""
    rng = np.random.default_rng(seed)
    params = [sample_admissible(rng, eps1, eps2) for _ in range(samples)]
    jobs = [(p, eps1, eps2, c_double_prime, mesh_n, quad_nodes) for p in params]
    rows = parallel_map(_local_max_task, jobs, threads)
    passed = bool(rows) and all(r["passed"] for r in rows)
    summary = {
        "failures": sum(1 for r in rows if not r["passed"]),
        "max_direct": max((r["direct"] for r in rows), default=None),
        "cap_cost_slope": cap_cost_scaling(
            [r["t"] for r in rows], [r["bump_excess"] for r in rows]
        ),
    }
    return ScanReport("local_max", len(rows), passed, LOCAL_MAX_COLUMNS, rows, summary)


# ---------------------------------------------------------------------------
# Scaling of the six integrals
# ---------------------------------------------------------------------------

SCALING_QUANTITIES = ("I1", "I2", "I3", "I4", "I5_log", "I6")
BOUNDED_QUANTITIES = ("I2", "I3", "I4", "I5_log", "I6")


def _scaling_task(job: Tuple[Phi5Parameter, float, float, float, float, int]) -> Dict[str, float]:
    param, s, eps1, eps2, c_double_prime, mesh_n = job
    omega = build_omega(param.b1, param.b2, param.t, eps1, eps2, c_double_prime)
    return variation_integrals(param.with_s(s), omega, mesh_n)


def _fit_slopes(log_s: np.ndarray, log_curves: np.ndarray) -> np.ndarray:
    xc = log_s - log_s.mean()
    yc = log_curves - log_curves.mean(axis=-1, keepdims=True)
    return (yc @ xc) / (xc @ xc)


def lemma_seven_scaling(
    samples: int = 4,
    seed: int = 0,
    t: float = 3e-5,
    s_min: float = 1e-8,
    s_count: int = 10,
    mesh_n: int = 64,
    eps1: float = DEFAULT_EPS1,
    eps2: float = DEFAULT_EPS2,
    c_double_prime: float = DEFAULT_C_DOUBLE_PRIME,
    bootstrap: int = 1000,
    threads: int = 1,
) -> List[ScalingReport]:
    """Log-log fits of ``|I1| ... |I6|`` against ``s`` on admissible samples.

    ``I5`` enters as ``|I5| / (-log 400 s)``.  Curves are geometric means over
    samples; the 95% interval comes from resampling the samples.
    """
    if not 0.0 < s_min < t:
        raise PreconditionError("need 0 < s_min < t", {"s_min": s_min, "t": t})
    rng = np.random.default_rng(seed)
    params = [sample_admissible(rng, eps1, eps2, t=t) for _ in range(samples)]
    s_grid = np.geomspace(s_min, t, s_count)
    jobs = [
        (p, float(s), eps1, eps2, c_double_prime, mesh_n) for p in params for s in s_grid
    ]
    parts = parallel_map(_scaling_task, jobs, threads)

    raw: Dict[str, np.ndarray] = {}
    for q in SCALING_QUANTITIES:
        key = "I5" if q == "I5_log" else q
        vals = np.abs([row[key] for row in parts]).reshape(samples, s_count)
        if q == "I5_log":
            vals = vals / -np.log(400.0 * s_grid)[None, :]
        raw[q] = vals

    log_s = np.log(s_grid)
    boot_rng = np.random.default_rng(seed + 1)
    picks = boot_rng.integers(0, samples, size=(bootstrap, samples))
    reports = []
    for q in SCALING_QUANTITIES:
        logs = np.log(np.maximum(raw[q], SCALING_FLOOR))
        curve = logs.mean(axis=0)
        slope = float(_fit_slopes(log_s, curve[None, :])[0])
        boot = _fit_slopes(log_s, logs[picks].mean(axis=1))
        lo, hi = np.percentile(boot, [2.5, 97.5])
        reports.append(
            ScalingReport(
                q,
                tuple(float(s) for s in s_grid),
                tuple(float(v) for v in np.exp(curve)),
                slope,
                float(lo),
                float(hi),
                float(raw[q].max()),
            )
        )
        logger.debug(f"{q}: slope {slope:.4f} [{lo:.4f}, {hi:.4f}]")
    return reports


def lemma_seven_verdict(reports: Sequence[ScalingReport]) -> Tuple[bool, Dict[str, bool]]:
    """``|I1| ~ s^(-1/2)``, the others bounded, and ``|I2| < 72π``."""
    by_name = {r.quantity: r for r in reports}
    checks = {"I1": -0.6 <= by_name["I1"].slope <= -0.4}
    for q in BOUNDED_QUANTITIES:
        r = by_name[q]
        checks[q] = r.slope >= -0.05 or r.max_value < 1e-8
    checks["I2_explicit"] = by_name["I2"].max_value < I2_BOUND
    return all(checks.values()), checks


# ---------------------------------------------------------------------------
# Cubic lemma
# ---------------------------------------------------------------------------


def _window_max(values: np.ndarray) -> np.ndarray:
    # a centered window of 257 samples starting at i has its middle at i + 128
    mins = minimum_filter1d(np.abs(values), size=CUBIC_WINDOW, axis=-1, mode="nearest")
    return mins[..., CUBIC_STARTS + CUBIC_WINDOW // 2].max(axis=-1)


def cubic_window_max(a: float, b: float, c: float) -> float:
    """Best lower bound of ``|a x^3 + b x + c|`` on a window of length 1/8 in [-1/2, 1/2]."""
    x = CUBIC_X
    return float(_window_max(a * x**3 + b * x + c))


def _sphere(theta: float | np.ndarray, phi: float | np.ndarray):
    return np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)


def _cubic_row(job: Tuple[float, int]) -> np.ndarray:
    theta, grid_n = job
    phi = np.linspace(0.0, 2.0 * math.pi, grid_n, endpoint=False)
    a, b, c = _sphere(theta, phi)
    x = CUBIC_X[None, :]
    return _window_max(a[:, None] * x**3 + b[:, None] * x + np.broadcast_to(c, phi.shape)[:, None])


def cubic_lemma_search(grid_n: int = 200, threads: int = 1) -> Tuple[float, Dict[str, float]]:
    """Minimum over the unit sphere of ``cubic_window_max``, refined by Nelder-Mead.

    Returns the grid minimum and a record of its argmin with the refined value.
    """
    if grid_n < 200:
        raise PreconditionError("grid_n must be at least 200", {"grid_n": grid_n})
    thetas = np.linspace(0.0, math.pi, grid_n)
    rows = parallel_map(_cubic_row, [(float(th), grid_n) for th in thetas], threads)
    values = np.vstack(rows)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    theta, phi = float(thetas[i]), 2.0 * math.pi * j / grid_n
    h_est = float(values[i, j])

    res = minimize(
        lambda v: cubic_window_max(*_sphere(v[0], v[1])),
        x0=np.array([theta, phi]),
        method="Nelder-Mead",
        options={"xatol": 1e-7, "fatol": 1e-10},
    )
    a, b, c = (float(v) for v in _sphere(theta, phi))
    ra, rb, rc = (float(v) for v in _sphere(res.x[0], res.x[1]))
    record = {
        "grid_n": grid_n,
        "a": a,
        "b": b,
        "c": c,
        "h_est": h_est,
        "h_refined": min(h_est, float(res.fun)),
        "refined_a": ra,
        "refined_b": rb,
        "refined_c": rc,
    }
    logger.info(f"🔍 cubic lemma grid_n={grid_n}: h_est={h_est:.6g} at ({a:.4f}, {b:.4f}, {c:.4f})")
    return h_est, record


CUBIC_COLUMNS = (
    "grid_n",
    "a",
    "b",
    "c",
    "h_est",
    "h_refined",
    "refined_a",
    "refined_b",
    "refined_c",
)


def cubic_lemma_report(grid_n: int = 200, threads: int = 1, rtol: float = 0.05) -> ScanReport:
    """Search at ``grid_n`` and ``2 grid_n``; pass iff both floors are positive and agree."""
    _, coarse = cubic_lemma_search(grid_n, threads)
    _, fine = cubic_lemma_search(2 * grid_n, threads)
    drift = abs(coarse["h_est"] - fine["h_est"]) / fine["h_est"] if fine["h_est"] > 0 else math.inf
    passed = min(coarse["h_refined"], fine["h_refined"]) > 0 and drift <= rtol
    summary = {"h_est": fine["h_est"], "h_refined": fine["h_refined"], "relative_drift": drift}
    return ScanReport("cubic_lemma", 2, bool(passed), CUBIC_COLUMNS, [coarse, fine], summary)


# ---------------------------------------------------------------------------
# The symmetric one-parameter subfamily
# ---------------------------------------------------------------------------

PHI1_COLUMNS = ("theta", "a0", "a3", "area", "error", "ratio", "status")


def _phi1_task(job: Tuple[float, float, int]) -> Dict[str, Any]:
    theta, a5, grid_n = job
    a0, a3 = math.cos(theta), math.sin(theta)
    param = FamilyParameter.from_coords((a0, 0.0, 0.0, a3, 0.0), a5)
    row = _area_task((param, grid_n))
    return {
        "theta": theta,
        "a0": a0,
        "a3": a3,
        "area": row["area"],
        "error": row["error"],
        "ratio": row["area"] / math.pi,
        "status": row["status"],
    }


def phi1_area_profile(
    a5: float = 0.0, n: int = 32, grid_n: int = 64, threads: int = 1
) -> List[Dict[str, Any]]:
    """Area of ``{a0 (x^2 - y^2 + a5 z^3) + a3 z = 0}`` over ``[a0:a3]`` in RP^1, in units of π."""
    if n < 2:
        raise PreconditionError("n must be at least 2", {"n": n})
    thetas = np.linspace(0.0, math.pi, n, endpoint=False)
    return parallel_map(_phi1_task, [(float(th), a5, grid_n) for th in thetas], threads)


# ---------------------------------------------------------------------------
# Saddle-in-ball bound
# ---------------------------------------------------------------------------

APPENDIX_A_COLUMNS = (
    "cx",
    "cy",
    "cz",
    "R",
    "area",
    "error",
    "ratio",
    "ratio_error",
    "mesh_area",
    "mesh_error",
    "agree",
    "slice_area",
    "slice_agree",
)
SLICE_RTOL = 1e-4


def appendix_a_campaign(
    samples: int = 100,
    mesh_checks: int = 20,
    grid_n: int = 64,
    quad_n: int = 64,
    seed: int = 0,
    threads: int = 1,
) -> ScanReport:
    """Ball-ratio bound for the saddle.

    Every ball is cross-checked against the slice integral; meshes of the
    rescaled member cover the smallest balls, where the grid resolves them.
    """
    check = sm.appendixA_bound_check(samples, quad_n=quad_n, seed=seed)
    rows = [dict(r, mesh_area=None, mesh_error=None, agree=None) for r in check.samples]
    for row in rows:
        ref = sm.saddle_slice_area((row["cx"], row["cy"], row["cz"]), row["R"])
        row["slice_area"] = ref
        row["slice_agree"] = abs(ref - row["area"]) <= row["error"] + SLICE_RTOL * ref
    slice_misses = sum(1 for r in rows if not r["slice_agree"])
    chosen = sorted(
        (k for k, r in enumerate(rows) if r["area"] > 0), key=lambda k: rows[k]["R"]
    )[:mesh_checks]
    jobs = [
        (sm.saddle_ball_parameter((rows[k]["cx"], rows[k]["cy"], rows[k]["cz"]), rows[k]["R"]), grid_n)
        for k in chosen
    ]
    for k, res in zip(chosen, parallel_map(_area_task, jobs, threads)):
        row = rows[k]
        r2 = row["R"] ** 2
        if res["status"] != "ok":
            row["agree"] = False
            continue
        row["mesh_area"] = res["area"] * r2
        row["mesh_error"] = res["error"] * r2
        row["agree"] = abs(row["mesh_area"] - row["area"]) <= row["mesh_error"] + row["error"]
    agreed = [rows[k]["agree"] for k in chosen]
    passed = check.passed and all(agreed) and slice_misses == 0
    summary = {
        "max_ratio": check.max_ratio,
        "max_ratio_error": check.max_ratio_error,
        "argmax": check.argmax,
        "mesh_checks": len(chosen),
        "mesh_disagreements": sum(1 for a in agreed if not a),
        "slice_disagreements": slice_misses,
        "ratio_profile": check.ratio_profile,
    }
    return ScanReport("appendix_a", len(rows), bool(passed), APPENDIX_A_COLUMNS, rows, summary)


# ---------------------------------------------------------------------------
# First variation against finite differences
# ---------------------------------------------------------------------------

FIRST_VARIATION_COLUMNS = (
    "b1",
    "b2",
    "b3",
    "b4",
    "b5",
    "s",
    "t",
    "I1",
    "I2",
    "I3",
    "I4",
    "I5",
    "I6",
    "total",
    "fd_total",
    "fd_step",
    "error",
    "partition_gap",
    "passed",
)


def _first_variation_task(job: Tuple[Phi5Parameter, float, float, float, int]) -> Dict[str, Any]:
    param, eps1, eps2, c_double_prime, mesh_n = job
    omega = build_omega(param.b1, param.b2, param.t, eps1, eps2, c_double_prime)
    bd = first_variation(param, omega, mesh_n)
    gap = abs(bd.boundary_total - sum(bd.terms[2:]))
    tol = 5.0 * (bd.fd_step**2 + bd.error)
    row: Dict[str, Any] = dict(param.to_dict())
    row.update({f"I{k}": v for k, v in enumerate(bd.terms, start=1)})
    row.update(
        total=bd.total,
        fd_total=bd.fd_total,
        fd_step=bd.fd_step,
        error=bd.error,
        partition_gap=gap,
        passed=bool(
            abs(bd.total - bd.fd_total) <= tol
            and bd.I1 < 0
            and bd.diagnostics["norm_check"] == 1.0
            and gap <= 1e-10 * max(1.0, abs(bd.boundary_total))
        ),
    )
    return row


def first_variation_campaign(
    samples: int = 10,
    seed: int = 0,
    eps1: float = DEFAULT_EPS1,
    eps2: float = DEFAULT_EPS2,
    c_double_prime: float = DEFAULT_C_DOUBLE_PRIME,
    mesh_n: int = 64,
    threads: int = 1,
) -> ScanReport:
    rng = np.random.default_rng(seed)
    params = [sample_admissible(rng, eps1, eps2) for _ in range(samples)]
    rows = parallel_map(
        _first_variation_task,
        [(p, eps1, eps2, c_double_prime, mesh_n) for p in params],
        threads,
    )
    passed = bool(rows) and all(r["passed"] for r in rows)
    summary = {
        "failures": sum(1 for r in rows if not r["passed"]),
        "max_abs_gap": max((abs(r["total"] - r["fd_total"]) for r in rows), default=None),
    }
    return ScanReport(
        "first_variation", len(rows), passed, FIRST_VARIATION_COLUMNS, rows, summary
    )


# ---------------------------------------------------------------------------
# Equivariance
# ---------------------------------------------------------------------------

EQUIVARIANCE_COLUMNS = ("index",) + PARAM_COLUMNS + ("z_power", "equivariant")


def equivariance_campaign(
    samples: int = 1000, seed: int = 0, n_points: int = 64, controls: int = 100
) -> ScanReport:
    """D2 equivariance on random members; the ``z^2`` control members must all fail."""
    rng = np.random.default_rng(seed)
    rows = []
    family_ok = control_fails = True
    for k in range(samples):
        quat = rng.normal(size=4)
        rot = Rotation3.from_quaternion(*(quat / np.linalg.norm(quat)))
        param = FamilyParameter.from_coords(rng.normal(size=5), rng.uniform(0.01, 1.0), rot)
        variants = [param]
        if k < controls:
            variants.append(FamilyParameter(param.proj, param.a5, param.rot, z_power=2))
        for p in variants:
            ok = fc.verify_equivariance(p, n_points, seed=seed + k)
            if p.z_power == 3:
                family_ok &= ok
            else:
                control_fails &= not ok
            rows.append({"index": k, **_param_columns(p), "z_power": p.z_power, "equivariant": ok})
    summary = {"family_equivariant": family_ok, "controls_fail": control_fails}
    return ScanReport(
        "equivariance", len(rows), bool(family_ok and control_fails), EQUIVARIANCE_COLUMNS, rows, summary
    )
