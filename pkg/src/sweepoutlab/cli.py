from __future__ import annotations

import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Tuple

import click

from . import family_core as fc
from . import surface_mesh as sm
from .cli_helpers.campaigns import CAMPAIGNS, FIGURES, run_campaign
from .cli_helpers.display import (
    display_error,
    display_info,
    display_success,
    display_warning,
)
from .config import CampaignConfig, resolve_threads
from .exceptions import (
    ConfigError,
    NonManifoldMesh,
    OutputError,
    PreconditionError,
    SingularLine,
    SingularityTooClose,
    format_error_message,
)
from .family_core import FamilyParameter, Phi5Parameter, Rotation3
from .log_config import setup_logging
from .utils import log_step_duration, write_json, write_run_metadata

__all__ = ["cli"]

logger = logging.getLogger("sweepoutlab")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _floats(text: str, count: int, name: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise click.BadParameter(f"{name} needs {count} comma-separated numbers") from exc
    if len(values) != count:
        raise click.BadParameter(f"{name} needs {count} comma-separated numbers")
    return values


def _load_config(ctx: click.Context, config_path: Optional[str]) -> CampaignConfig:
    config = CampaignConfig.from_toml(config_path) if config_path else CampaignConfig()
    overrides = {}
    if ctx.obj["seed"] is not None:
        overrides["seed"] = ctx.obj["seed"]
    if ctx.obj["out"] is not None:
        overrides["output_dir"] = str(ctx.obj["out"])
    return replace(config, **overrides)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--threads",
    type=int,
    default=None,
    help="Worker processes (overrides SWEEPOUTLAB_THREADS and the config file).",
)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option(
    "--out",
    type=click.Path(file_okay=False, dir_okay=True),
    default=None,
    help="Output directory (overrides output_dir from the config file).",
)
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable verbose logging output.",
)
@click.pass_context
def cli(
    ctx: click.Context,
    threads: Optional[int],
    seed: Optional[int],
    out: Optional[str],
    verbose: bool,
) -> None:
    """sweepoutlab: meshes, areas and verification campaigns for the saddle sweepout."""
    try:
        setup_logging(verbose, out)
    except OSError as exc:
        display_error(f"Cannot set up logging: {exc}")
        sys.exit(EXIT_FAIL)
    logger.info(f"🚀 sweepoutlab CLI started - threads: {threads}, seed: {seed}, out: {out}")
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads
    ctx.obj["seed"] = seed
    ctx.obj["out"] = Path(out) if out else None


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


def _parse_parameter(
    proj: Optional[str], a5: float, rot: Optional[str], phi5: Optional[str]
):
    if (proj is None) == (phi5 is None):
        raise click.UsageError("give exactly one of --proj or --phi5")
    if phi5 is not None:
        b1, b2, b3, b4, b5, s = _floats(phi5, 6, "--phi5")
        return Phi5Parameter.from_raw(b1, b2, b3, b4, b5, s)
    rotation = Rotation3.from_quaternion(*_floats(rot, 4, "--rot")) if rot else None
    return FamilyParameter.from_coords(_floats(proj, 5, "--proj"), a5, rotation)


@cli.command()
@click.option("--proj", help="Projective coordinates a0,a1,a2,a3,a4.")
@click.option("--a5", type=float, default=0.0, show_default=True, help="Cubic coefficient.")
@click.option("--rot", help="Rotation as a quaternion q0,q1,q2,q3 (scalar first).")
@click.option("--phi5", help="Translated cubic b1,b2,b3,b4,b5,s; the direction is normalized.")
@click.option("--grid-n", type=int, default=64, show_default=True, help="Grid cells per axis.")
@click.pass_context
def mesh(
    ctx: click.Context,
    proj: Optional[str],
    a5: float,
    rot: Optional[str],
    phi5: Optional[str],
    grid_n: int,
) -> None:
    """Mesh one member, print area/topology/singularities as JSON, write OBJ and PLY."""
    start = time.time()
    out = ctx.obj["out"] or Path.cwd()
    try:
        param = _parse_parameter(proj, a5, rot, phi5)
    except PreconditionError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_USAGE)

    singular = {"points": [], "line": False}
    try:
        points = fc.singular_points(param)
    except SingularLine:
        singular["line"] = True
        points = []
    if points:
        named = ", ".join(str(tuple(round(float(c), 12) + 0.0 for c in p)) for p in points)
        display_error(f"Singular parameter: singular point(s) at {named}")
        sys.exit(EXIT_USAGE)

    try:
        coarse = sm.extract_meshes(param, None, grid_n)
        fine = sm.extract_meshes(param, None, 2 * grid_n)
        estimate = sm.area([coarse, fine])
    except SingularityTooClose as exc:
        display_error(f"Singular parameter: {exc.message} (point {exc.point})")
        sys.exit(EXIT_USAGE)
    except PreconditionError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_USAGE)
    log_step_duration("Meshing", start)
    try:
        topology = sm.TopologyReport(
            tuple(c for m in coarse for c in sm.topology(m).components)
        ).to_dict()
    except NonManifoldMesh as exc:
        display_warning(f"Topology unavailable: {exc.message}")
        topology = None

    family = param.to_family() if isinstance(param, Phi5Parameter) else param
    report = {
        "param": param.to_dict(),
        "digest": family.digest(),
        "grid_n": grid_n,
        "area": estimate.to_dict(),
        "topology": topology,
        "tangential": any(m.tangential for m in coarse),
        "singularities": singular,
    }
    try:
        files = [
            sm.export_mesh(coarse, out / sm.mesh_filename(family, grid_n, "obj")),
            sm.export_mesh(coarse, out / sm.mesh_filename(family, grid_n, "ply")),
        ]
        report["files"] = [str(f) for f in files]
        write_json(out / sm.mesh_filename(family, grid_n, "json"), report)
    except OutputError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_FAIL)
    if report["tangential"]:
        display_warning("Surface is nearly tangent to the sphere; topology may be unreliable")
    click.echo(json.dumps(report, indent=2, sort_keys=True, default=float))


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@cli.command()
@click.argument("campaign", type=click.Choice(sorted(CAMPAIGNS)))
@click.argument("config_path", required=False, type=click.Path(dir_okay=False))
@click.pass_context
def verify(ctx: click.Context, campaign: str, config_path: Optional[str]) -> None:
    """Run a verification campaign; exit 0 on pass, 1 on fail, 2 on config error."""
    try:
        config = _load_config(ctx, config_path)
        threads = resolve_threads(ctx.obj["threads"], config)
    except ConfigError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_USAGE)
    out = Path(config.output_dir)
    display_info(f"Running {campaign} with {threads} worker(s), seed {config.seed}")

    try:
        reports = run_campaign(campaign, config, threads, out)
        passed = all(r.passed for r in reports)
        write_run_metadata(
            out,
            f"verify {campaign}",
            config.to_dict(),
            {"threads": threads, "passed": passed},
        )
    except (ConfigError, PreconditionError) as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_USAGE)
    except OutputError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_FAIL)

    click.echo(json.dumps({r.campaign: r.passed for r in reports}, sort_keys=True))
    if passed:
        display_success(f"{campaign} passed")
        sys.exit(EXIT_OK)
    display_error(f"{campaign} failed")
    sys.exit(EXIT_FAIL)


# ---------------------------------------------------------------------------
# plot-data
# ---------------------------------------------------------------------------


@cli.command(name="plot-data")
@click.argument("figure", type=click.Choice(sorted(FIGURES)))
@click.argument("config_path", required=False, type=click.Path(dir_okay=False))
@click.pass_context
def plot_data(ctx: click.Context, figure: str, config_path: Optional[str]) -> None:
    """Write mesh files and gnuplot .dat grids for a figure."""
    try:
        config = _load_config(ctx, config_path)
        threads = resolve_threads(ctx.obj["threads"], config)
    except ConfigError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_USAGE)
    out = Path(config.output_dir)
    start = time.time()
    try:
        paths = FIGURES[figure](config, threads, out)
        write_run_metadata(out, f"plot-data {figure}", config.to_dict(), {"threads": threads})
    except (ConfigError, PreconditionError) as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_USAGE)
    except OutputError as exc:
        display_error(format_error_message(exc))
        sys.exit(EXIT_FAIL)
    log_step_duration(f"plot-data {figure}", start)
    for path in paths:
        display_success(f"Wrote {path}")
    click.echo(json.dumps([str(p) for p in paths]))


if __name__ == "__main__":  # pragma: no cover
    cli()
