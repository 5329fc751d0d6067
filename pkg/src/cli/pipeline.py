"""Pipeline CLI command: end-to-end run over one or more case directories."""

from pathlib import Path
from typing import List, Optional

import typer

from ..lib.logging import get_logger
from ..services.pipeline import PipelineOptions, run_pipeline, run_pipelines
from .common import CliState, command_errors, resolve_config

logger = get_logger(__name__)


def pipeline_command(
    state: CliState,
    case_dirs: List[Path],
    template_dir: Path,
    output_dir: Path,
    config_file: Optional[Path] = None,
    refine: int = 0,
    weighting: str = "cotangent",
    dv_weighting: str = "none",
    smooth_convention: Optional[str] = None,
    detail: bool = False,
) -> None:
    """
    Run flatten, register, evaluate and report for each case.

    A single case writes straight into ``output_dir``; several cases write to
    ``output_dir/<case name>`` and run ``--jobs`` at a time.
    """
    with command_errors("pipeline"):
        config = resolve_config(state, config_file, smooth_convention=smooth_convention)
        options = PipelineOptions(
            refine_iterations=refine,
            flatten_weighting=weighting,
            dv_weighting=dv_weighting,
            include_detail=detail,
        )
        if len(case_dirs) == 1:
            result = run_pipeline(case_dirs[0], template_dir, output_dir, config, options)
            typer.echo(f"Pipeline complete: {result.output_dir}")
            typer.echo(
                f"d|v| structural: {result.d_v_structural:.4f}  registered: {result.d_v_registered:.4f}  "
                f"F_flip: {result.f_flip}"
            )
            return

        statuses = run_pipelines(case_dirs, template_dir, output_dir, config, options, n_jobs=state.jobs)
        for status in statuses:
            if status["ok"]:
                typer.echo(f"{status['case']}: ok d|v|={status['d_v']:.4f} F_flip={status['f_flip']}")
            else:
                typer.echo(f"{status['case']}: {status['error']}", err=True)
        if not all(status["ok"] for status in statuses):
            raise typer.Exit(code=1)
