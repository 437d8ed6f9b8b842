"""
Campaign and plot-data runners for the sweepoutlab CLI.

Every runner takes the loaded config, the worker count and the output
directory, writes its own files and returns the reports whose verdicts
decide the exit code.
"""

from __future__ import annotations

import logging
import math
import time
from pathlib import Path
from typing import Callable, Dict, List

from ..config import CampaignConfig
from ..exceptions import ConfigError, NonManifoldMesh
from .. import family_core as fc
from .. import surface_mesh as sm
from .. import topology_checks as tc
from .. import verifiers as vf
from ..family_core import FamilyParameter, Phi5Parameter
from ..utils import ensure_dir, log_step_duration, write_dat, write_json, write_text
from .display import (
    display_margins,
    display_report,
    display_scaling,
    display_summary_table,
)

logger = logging.getLogger("sweepoutlab.campaigns")

Runner = Callable[[CampaignConfig, int, Path], List[vf.ScanReport]]

TABLE1_B3 = (0.1, 0.407, 0.6, -0.407, -0.6)
TABLE1_S = (0.05, 0.3)
TABLE1_B4 = 0.1
PHI1_MESH_ANGLES = (math.pi / 8.0, math.pi / 4.0, 3.0 * math.pi / 8.0)
PARITY_DELTAS = (-1e-3, -5e-4, 5e-4, 1e-3)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def run_global_max(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    report = vf.scan_global_max(
        config.samples["global_max"], config.grid["mesh"], config.seed, threads
    )
    display_margins(report.summary["margins"])
    return [report]


def run_width(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    reports = [
        vf.scan_width(a5, config.samples["width"], config.grid["mesh"], config.seed, threads)
        for a5 in config.a5_list
    ]
    if len(reports) > 1:
        trend = vf.width_trend(reports)
        write_json(out / "width_trend.json", trend)
        logger.info(f"🔍 width monotonicity trend: nonincreasing={trend['nonincreasing']}")
    return reports


def run_genus(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    a5_values = [a5 for a5 in config.a5_list if a5 > 0]
    if not a5_values:
        raise ConfigError("genus campaign needs a positive value in a5_list")
    return [
        vf.genus_scan(a5, config.samples["genus"], config.grid["mesh"], config.seed, threads)
        for a5 in a5_values
    ]


def run_local_max(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    report = vf.local_max_campaign(
        config.samples["local_max"],
        config.seed,
        config.eps1,
        config.eps2,
        config.c_double_prime,
        config.grid["sheet"],
        threads=threads,
    )
    # the fixed-direction sweep over t gives the scaling of the cap cost
    sweep = vf.local_max_experiment(
        0.0,
        0.0,
        config.local_max_direction,
        [t for t in config.t_list if t < config.eps2],
        config.eps1,
        config.eps2,
        config.c_double_prime,
        config.grid["sheet"],
    )
    sweep.campaign = "local_max_sweep"
    return [report, sweep]


def _scaling_reports(config: CampaignConfig, threads: int):
    return vf.lemma_seven_scaling(
        config.samples["lemma43"],
        config.seed,
        config.lemma_t,
        config.s_min,
        config.s_count,
        config.grid["sheet"],
        config.eps1,
        config.eps2,
        config.c_double_prime,
        threads=threads,
    )


def run_lemma43(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    reports = _scaling_reports(config, threads)
    passed, checks = vf.lemma_seven_verdict(reports)
    display_scaling(reports, checks)
    write_json(out / "lemma43_scaling.json", [r.to_dict() for r in reports])
    rows = [
        {
            "quantity": r.quantity,
            "slope": r.slope,
            "ci_low": r.ci_low,
            "ci_high": r.ci_high,
            "max_value": r.max_value,
            "check": checks[r.quantity],
        }
        for r in reports
    ]
    columns = ("quantity", "slope", "ci_low", "ci_high", "max_value", "check")
    return [vf.ScanReport("lemma43", config.samples["lemma43"], passed, columns, rows, checks)]


def run_cubic_lemma(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    return [vf.cubic_lemma_report(config.grid["cubic"], threads)]


def run_appendix_a(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    return [
        vf.appendix_a_campaign(
            config.samples["appendix_a"],
            config.samples["appendix_a_mesh"],
            config.grid["mesh"],
            config.grid["quad"],
            config.seed,
            threads,
        )
    ]


def run_first_variation(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    return [
        vf.first_variation_campaign(
            config.samples["first_variation"],
            config.seed,
            config.eps1,
            config.eps2,
            config.c_double_prime,
            config.grid["sheet"],
            threads,
        )
    ]


def run_equivariance(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    return [vf.equivariance_campaign(config.samples["equivariance"], config.seed)]


def run_parity_table(config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    eps0, n = config.eps0, config.grid["loop"]
    base = tc.parity_table(eps0, n, threads)
    doubled = tc.parity_table(eps0, 2 * n, threads)
    halved = tc.parity_table(eps0 / 2.0, n, threads)

    loop = tc.loop_variant("c1", "A0", eps0, n)
    perturbed = {
        delta: tc.intersection_parity(loop, tc.BundleSpec("A0").perturbed(delta))
        for delta in PARITY_DELTAS
    }
    perturbation_ok = all(v == base.values["A0"]["c1"] for v in perturbed.values())

    write_text(out / "parity_table.txt", base.pretty())
    write_json(out / "parity_table_values.json", base.to_dict())
    display_summary_table("Parity table", {"matches": base.matches})

    rows = [
        {
            "bundle": b,
            "loop": r,
            "parity": base.values[b][r],
            "expected": base.expected[b][r],
            "doubled_n": doubled.values[b][r],
            "halved_eps0": halved.values[b][r],
        }
        for b in tc.BUNDLE_TAGS
        for r in tc.LOOP_ROWS
    ]
    summary = {
        "matches": base.matches,
        "stable_doubled_n": doubled.values == base.values,
        "stable_halved_eps0": halved.values == base.values,
        "perturbation_stable": perturbation_ok,
        "mismatches": [list(m) for m in base.mismatches()],
    }
    passed = all(v for k, v in summary.items() if isinstance(v, bool))
    columns = ("bundle", "loop", "parity", "expected", "doubled_n", "halved_eps0")
    return [vf.ScanReport("parity_table", len(rows), passed, columns, rows, summary)]


CAMPAIGNS: Dict[str, Runner] = {
    "global-max": run_global_max,
    "width": run_width,
    "local-max": run_local_max,
    "lemma43": run_lemma43,
    "cubic-lemma": run_cubic_lemma,
    "genus": run_genus,
    "appendixA": run_appendix_a,
    "parity-table": run_parity_table,
    "first-variation": run_first_variation,
    "equivariance": run_equivariance,
}


def run_campaign(name: str, config: CampaignConfig, threads: int, out: Path) -> List[vf.ScanReport]:
    """Run one campaign, write its reports and return them."""
    start = time.time()
    ensure_dir(out)
    reports = CAMPAIGNS[name](config, threads, out)
    for report in reports:
        report.write(out)
        display_report(report)
    log_step_duration(f"verify {name}", start)
    return reports


# ---------------------------------------------------------------------------
# plot-data
# ---------------------------------------------------------------------------


def _mesh_annotation(param, grid_n: int, path: Path) -> Dict[str, object]:
    mesh = sm.extract_mesh(param, None, grid_n, check_singular=False)
    sm.export_mesh(mesh, path)
    try:
        genus = sm.topology(mesh).total_genus
    except NonManifoldMesh:
        genus = None
    return {"area": sm.mesh_area(mesh), "genus": genus}


def plot_table1(config: CampaignConfig, threads: int, out: Path) -> List[Path]:
    """Meshes of ``x^2 - y^2 + s (z^3 + b3 z + 0.1)`` and their root annotations."""
    grid_n = config.grid["mesh"]
    mesh_dir = ensure_dir(out / "table1")
    rows = []
    for b3 in TABLE1_B3:
        kind = fc.classify_cubic(b3, TABLE1_B4, 1.0)
        for s in TABLE1_S:
            param = Phi5Parameter.from_raw(0.0, 0.0, b3, TABLE1_B4, 1.0, s)
            info = _mesh_annotation(param, grid_n, mesh_dir / f"b3_{b3!r}_s_{s!r}.obj")
            roots = ";".join(f"{z:.6g}x{m}" for z, m in kind.roots)
            rows.append((b3, s, kind.kind.value, roots, info["area"], info["genus"]))
            logger.info(f"🔍 table1 b3={b3} s={s}: {kind.kind.value}, genus {info['genus']}")
    path = write_dat(
        out / "table1.dat",
        "surfaces x^2 - y^2 + s (z^3 + b3 z + 0.1) = 0 in the unit ball",
        ("b3", "s", "kind", "roots", "area", "genus"),
        rows,
        notes=(f"grid_n={grid_n}",),
    )
    return [path]


def plot_phi1(config: CampaignConfig, threads: int, out: Path) -> List[Path]:
    """Area profile of the symmetric subfamily, plus a few sample meshes."""
    grid_n = config.grid["mesh"]
    paths = []
    for a5 in [0.0] + [a for a in config.a5_list if a > 0]:
        rows = vf.phi1_area_profile(a5, config.samples["phi1"], grid_n, threads)
        paths.append(
            write_dat(
                out / f"phi1_a5_{a5!r}.dat",
                f"area / pi of a0 (x^2 - y^2 + a5 z^3) + a3 z = 0, a5={a5!r}",
                vf.PHI1_COLUMNS,
                ([r[c] for c in vf.PHI1_COLUMNS] for r in rows),
            )
        )
    mesh_dir = ensure_dir(out / "phi1")
    for theta in PHI1_MESH_ANGLES:
        param = FamilyParameter.from_coords((math.cos(theta), 0.0, 0.0, math.sin(theta), 0.0))
        _mesh_annotation(param, grid_n, mesh_dir / f"theta_{theta:.4f}.obj")
    return paths


def plot_scaling(config: CampaignConfig, threads: int, out: Path) -> List[Path]:
    reports = {r.quantity: r for r in _scaling_reports(config, threads)}
    s_values = reports["I1"].s_values
    rows = []
    for k, s in enumerate(s_values):
        i5_log = reports["I5_log"].values[k]
        rows.append(
            (
                s,
                reports["I1"].values[k],
                reports["I2"].values[k],
                reports["I3"].values[k],
                reports["I4"].values[k],
                i5_log * -math.log(400.0 * s),
                reports["I6"].values[k],
                i5_log,
            )
        )
    slopes = [f"{q} slope {r.slope:.4f}" for q, r in reports.items()]
    path = write_dat(
        out / "scaling.dat",
        "geometric means of |I1| ... |I6| over admissible samples",
        ("s", "I1", "I2", "I3", "I4", "I5", "I6", "I5_log"),
        rows,
        notes=slopes,
    )
    return [path]


FIGURES: Dict[str, Callable[[CampaignConfig, int, Path], List[Path]]] = {
    "table1": plot_table1,
    "phi1-figure": plot_phi1,
    "scaling": plot_scaling,
}
