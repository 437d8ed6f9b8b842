from __future__ import annotations

import logging
from pathlib import Path


def setup_logging(verbose: bool = False, out_dir: Path | str | None = None) -> Path:
    """Configure logging for the entire application.

    Logs go to stderr and to ``<out_dir>/.sweepoutlab/sweepoutlab.log``.
    Returns the path of the log file.
    """
    base = Path(out_dir) if out_dir is not None else Path.cwd()
    log_dir = base / ".sweepoutlab"
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / "sweepoutlab.log"

    root_logger = logging.getLogger()

    # Remove any existing handlers to avoid duplication
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    log_level = logging.DEBUG if verbose else logging.INFO
    root_logger.setLevel(log_level)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # stdout is reserved for JSON reports
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    stream_handler.setLevel(log_level if verbose else logging.WARNING)

    file_handler = logging.FileHandler(log_file)
    file_handler.setFormatter(formatter)

    root_logger.addHandler(stream_handler)
    root_logger.addHandler(file_handler)

    logger = logging.getLogger("sweepoutlab")
    logger.setLevel(log_level)

    if verbose:
        logger.debug("🔍 Verbose logging re-initialized")
    return log_file
