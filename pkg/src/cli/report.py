"""Report CLI command: merge report CSVs into one table."""

from pathlib import Path
from typing import List

import typer

from ..lib.logging import get_logger
from ..services.report_generator import emit_report, generate_report, load_report_csv, merge_reports
from .common import command_errors

logger = get_logger(__name__)


def report_command(report_files: List[Path], output_dir: Path, formats: str = "text,csv") -> None:
    """
    Merge evaluation reports (for example both hemispheres) and render them.
    """
    with command_errors("report"):
        requested = [name.strip() for name in formats.split(",") if name.strip()]
        merged = merge_reports(load_report_csv(path) for path in report_files)
        for output_format in requested:
            emit_report(merged, output_format)
        generate_report(merged, output_dir, requested)
        typer.echo(emit_report(merged, "text"), nl=False)
