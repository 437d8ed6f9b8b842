"""
Display helper functions for the sweepoutlab CLI
"""

from typing import Any, Dict, Sequence

from rich.console import Console
from rich.markup import escape
from rich.table import Table

# stdout carries the JSON reports
console = Console(stderr=True, soft_wrap=True)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


def display_report(report) -> None:
    """Verdict line and scalar summary of a ScanReport."""
    console.print(escape(report.pretty()))


def display_summary_table(title: str, summary: Dict[str, Any]) -> None:
    table = Table(title=title, header_style="bold magenta")
    table.add_column("Quantity", style="cyan", no_wrap=True)
    table.add_column("Value", style="green", justify="right")
    for key, value in summary.items():
        if isinstance(value, (dict, list)):
            continue
        table.add_row(key, _fmt(value))
    console.print(table)


def display_margins(margins: Sequence[Dict[str, Any]]) -> None:
    """Minimum gap to 2π by distance from the apex."""
    table = Table(title="Margin to 2π", header_style="bold magenta")
    table.add_column("Distance", style="cyan")
    table.add_column("Samples", justify="right")
    table.add_column("Min gap", style="green", justify="right")
    for m in margins:
        gap = m["min_gap"]
        style = "green" if gap is None or gap > 0 else "red"
        table.add_row(
            f"({m['distance_lo']:.3g}, {m['distance_hi']:.3g}]",
            str(m["count"]),
            f"[{style}]{_fmt(gap)}[/{style}]",
        )
    console.print(table)


def display_scaling(reports: Sequence[Any], checks: Dict[str, bool]) -> None:
    table = Table(title="Scaling in s", header_style="bold magenta")
    table.add_column("Quantity", style="cyan", no_wrap=True)
    table.add_column("Slope", justify="right")
    table.add_column("95% CI", justify="right")
    table.add_column("Max", justify="right")
    table.add_column("Check")
    for r in reports:
        ok = checks.get(r.quantity)
        mark = "[green]✅[/green]" if ok else "[red]❌[/red]"
        table.add_row(
            r.quantity,
            f"{r.slope:.4f}",
            f"[{r.ci_low:.3f}, {r.ci_high:.3f}]",
            _fmt(r.max_value),
            mark,
        )
    console.print(table)


def display_progress(message: str):
    """Display progress message"""
    console.print(f"[blue]{escape(message)}[/blue]")


def display_success(message: str):
    """Display success message"""
    console.print(f"[green]✅ {escape(message)}[/green]")


def display_warning(message: str):
    """Display warning message"""
    console.print(f"[yellow]⚠️  {escape(message)}[/yellow]")


def display_error(message: str):
    """Display error message"""
    console.print(f"[red]❌ {escape(message)}[/red]")


def display_info(message: str):
    """Display info message"""
    console.print(f"[blue]ℹ️  {escape(message)}[/blue]")
