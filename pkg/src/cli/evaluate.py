"""Evaluate CLI command: paired raw/registered report for a registration output."""

from pathlib import Path

import typer

from ..lib.logging import get_logger
from ..services.case_directory import load_case_bold, load_case_map, load_case_stimulus, open_case
from ..services.evaluation_runner import create_evaluation_runner
from ..services.registration_io import load_registration
from ..services.report_generator import emit_report, generate_report
from .common import CliState, command_errors

logger = get_logger(__name__)


def evaluate_command(
    state: CliState,
    subject_dir: Path,
    template_dir: Path,
    registration_dir: Path,
    output_dir: Path,
    dv_weighting: str = "none",
    r2_threshold: float = 0.1,
    svg: bool = True,
    detail: bool = False,
) -> None:
    """
    Evaluate a registration output and write report.txt, report.csv and optionally report.svg.
    """
    with command_errors("evaluate"):
        subject_case = open_case(subject_dir)
        subject = load_case_map(subject_case)
        template = load_case_map(open_case(template_dir))
        registration = load_registration(registration_dir, subject)
        stimulus = load_case_stimulus(subject_case)
        observed = load_case_bold(subject_case, stimulus.tr)

        runner = create_evaluation_runner(template, stimulus, r2_threshold=r2_threshold, dv_weighting=dv_weighting)
        report = runner.evaluate(subject, registration, observed, include_detail=detail)
        formats = ("text", "csv", "svg") if svg else ("text", "csv")
        generate_report(report, output_dir, formats)

        typer.echo(emit_report(report, "text"), nl=False)
