from pathlib import Path
from typing import Any, Dict, Optional

from loguru import logger
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from rich.theme import Theme

from waveop2d.workbench_types import VerificationReport

# Create rich console with custom theme
console = Console(theme=Theme({
    "info": "cyan",
    "warning": "yellow",
    "error": "red bold",
    "success": "green",
    "highlight": "magenta",
    "timestamp": "dim cyan",
    "defect": "bright_yellow",
    "verdict": "bright_green",
    "cache": "bright_blue",
}))

_handlers: list = []


def print_startup_banner(version: str, subcommand: str) -> None:
    """Print a styled startup banner"""
    console.print("\n")
    console.print("=" * 80, style="cyan")
    console.print(" " * 32 + f"[bold cyan]WAVEOP2D v{version}[/]")
    console.print(" " * 22 + f"[dim cyan]2D scattering workbench :: {subcommand}[/]")
    console.print("=" * 80, style="cyan")
    console.print("\n")


def format_number(num: float, digits: int = 3) -> str:
    """Scientific notation for defects and thresholds"""
    return f"{num:.{digits}e}"


def setup_logging(log_dir: Optional[Path] = Path("logs"), level: str = "INFO") -> None:
    """Configure logging with custom format and handlers"""
    # Remove default handler
    logger.remove()
    _handlers.clear()

    if log_dir is not None:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        _handlers.append(logger.add(
            str(Path(log_dir) / "waveop2d_{time:YYYY-MM-DD}.log"),
            rotation="12:00",
            retention="7 days",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{line} | {message}",
            level="DEBUG",
        ))

    _handlers.append(logger.add(
        console_handler,
        colorize=True,
        format="{message}",
        level=level.upper(),
    ))


def console_handler(message: Any) -> None:
    """Custom console handler with rich formatting"""
    record = message.record
    time_str = record["time"].strftime("%H:%M:%S")
    level_name = record["level"].name
    text = escape(str(record["message"]))
    lowered = text.lower()

    if level_name == "ERROR":
        console.print(f"[timestamp]{time_str}[/] [error]✗ {text}[/]")
    elif level_name == "WARNING":
        console.print(f"[timestamp]{time_str}[/] [warning]! {text}[/]")
    elif level_name == "SUCCESS":
        console.print(f"[timestamp]{time_str}[/] [success]✓ {text}[/]")
    elif "cache" in lowered:
        console.print(f"[timestamp]{time_str}[/] [cache]{text}[/]")
    elif "defect" in lowered:
        console.print(f"[timestamp]{time_str}[/] [defect]{text}[/]")
    elif "verdict" in lowered or "->" in text:
        console.print(f"[timestamp]{time_str}[/] [verdict]{text}[/]")
    else:
        console.print(f"[timestamp]{time_str}[/] [info]{text}[/]")


def print_report_summary(report: VerificationReport) -> None:
    """Print a table of check verdicts"""
    table = Table(title=f"{report.subcommand} :: config {report.config_hash[:12]}",
                  header_style="bold cyan")
    table.add_column("check")
    table.add_column("verdict")
    table.add_column("defect", justify="right")
    table.add_column("threshold", justify="right")
    for check in report.checks:
        style = "green" if check.verdict.ok else "red"
        table.add_row(escape(check.name), f"[{style}]{check.verdict.value}[/]",
                      format_number(check.defect), format_number(check.threshold))
    console.print(table)
    overall = "[success]all checks ok[/]" if report.passed else "[error]some checks failed[/]"
    console.print(overall)


def print_status_update(state: Dict[str, Any]) -> None:
    """Print the lab state after a run"""
    console.print("\n[cyan]Status Update[/]")
    console.print("-" * 40, style="dim cyan")
    console.print(f"Completed : [green]{', '.join(state.get('completed', [])) or '-'}[/]")
    if state.get("skipped"):
        console.print(f"Skipped   : [yellow]{', '.join(state['skipped'])}[/]")
    for name, error in state.get("errors", {}).items():
        console.print(f"Error     : [red]{escape(name)}: {escape(error)}[/]")
    if state.get("theta_sign") is not None:
        console.print(f"theta sign: [magenta]{state['theta_sign']:+d}[/]")
    console.print("-" * 40, style="dim cyan")
