"""Utility helpers for sweepoutlab.

Report writers, template rendering and the campaign worker pool.  Every
writer runs in the main process only; workers return plain records.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
import yaml
from jinja2 import Template

from .exceptions import OutputError

__all__ = [
    "render_template",
    "format_value",
    "write_json",
    "write_csv",
    "write_dat",
    "write_text",
    "write_run_metadata",
    "ensure_dir",
    "parallel_map",
    "log_step_duration",
]

logger = logging.getLogger("sweepoutlab.utils")

T = TypeVar("T")
R = TypeVar("R")

DAT_TEMPLATE = """\
# {{ title }}
{% for line in notes %}# {{ line }}
{% endfor %}# {{ columns | join(" ") }}
{% for row in rows %}{{ row | join(" ") }}
{% endfor %}"""


def render_template(template_content: str, variables: dict) -> str:
    """Render a Jinja2 template with the given variables."""
    return Template(template_content, keep_trailing_newline=True).render(**variables)


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats so reruns are byte-identical."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def ensure_dir(path: Path | str) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Cannot create directory {p}", {"error": str(e)}) from e
    return p


def write_text(path: Path, text: str) -> Path:
    try:
        ensure_dir(path.parent)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError(f"Cannot write {path}", {"error": str(e)}) from e
    logger.debug(f"💾 wrote {path}")
    return path


def write_json(path: Path | str, payload: Any) -> Path:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    return write_text(Path(path), text)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    try:
        ensure_dir(path.parent)
        with open(path, "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        raise OutputError(f"Cannot write {path}", {"error": str(e)}) from e
    logger.debug(f"💾 wrote {path}")
    return path


def write_dat(
    path: Path | str,
    title: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    notes: Sequence[str] = (),
) -> Path:
    """Whitespace-separated gnuplot data with a commented header."""
    text = render_template(
        DAT_TEMPLATE,
        {
            "title": title,
            "notes": list(notes),
            "columns": list(columns),
            "rows": [[format_value(v) for v in row] for row in rows],
        },
    )
    return write_text(Path(path), text)


def write_run_metadata(
    out_dir: Path | str,
    command: str,
    config: Optional[dict] = None,
    extra: Optional[dict] = None,
) -> Path:
    """Sidecar ``run_metadata.yaml``; the only output that carries a timestamp."""
    from . import __version__

    config = _jsonable(config or {})
    digest = hashlib.sha1(json.dumps(config, sort_keys=True).encode()).hexdigest()
    payload = {
        "command": command,
        "version": __version__,
        "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_digest": digest,
        "config": config,
    }
    if extra:
        payload.update(_jsonable(extra))
    path = Path(out_dir) / "run_metadata.yaml"
    return write_text(path, yaml.safe_dump(payload, sort_keys=True))


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """``[func(x) for x in items]`` on a process pool; order is preserved.

    *func* must be a picklable module-level function.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    workers = min(threads, len(items))
    chunksize = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))


def log_step_duration(step_name: str, start_time: float) -> None:
    duration = time.time() - start_time
    logging.getLogger("sweepoutlab.timer").info(
        f"TIMER: Step '{step_name}' finished in {duration:.2f}s"
    )
