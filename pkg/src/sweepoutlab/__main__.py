"""sweepoutlab CLI entry point.

Allows execution with ``python -m sweepoutlab`` and forwards to the
top-level ``sweepoutlab.cli`` group.
"""

from __future__ import annotations

from .cli import cli


def main() -> None:  # pragma: no cover
    cli()


if __name__ == "__main__":  # pragma: no cover
    main()
