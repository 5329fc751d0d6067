"""Synth CLI command: write a ground-truth-known subject/template case pair."""

from pathlib import Path

import typer

from ..lib.logging import get_logger
from ..models.retinotopic_map import Hemisphere
from ..models.synthetic_spec import R2Profile, SyntheticSpec
from ..services.case_directory import write_synthetic_case
from ..services.synthetic_data import build_synthetic_case
from .common import CliState, command_errors, effective_seed

logger = get_logger(__name__)


def synth_command(
    state: CliState,
    output_dir: Path,
    resolution: int,
    mu_max: float,
    noise_sd: float,
    bands: int,
    bold_snr: float,
    hemisphere: str,
    r2_base: float,
    r2_decay: float,
    n_sweeps: int,
    frames_per_sweep: int,
    stimulus_resolution: int,
) -> None:
    """
    Generate a synthetic experiment into ``<output_dir>/subject`` and ``<output_dir>/template``.
    """
    with command_errors("synth"):
        spec = SyntheticSpec(
            mesh_resolution=resolution,
            deformation_mu_max=mu_max,
            visual_noise_sd=noise_sd,
            bands=bands,
            bold_snr=bold_snr,
            hemisphere=Hemisphere(hemisphere),
            r2_profile=R2Profile(base=r2_base, decay=r2_decay),
            n_sweeps=n_sweeps,
            frames_per_sweep=frames_per_sweep,
            stimulus_resolution=stimulus_resolution,
            seed=effective_seed(state),
        )
        synthetic = build_synthetic_case(spec)
        subject_dir, template_dir = write_synthetic_case(
            synthetic, Path(output_dir) / "subject", Path(output_dir) / "template"
        )

        typer.echo(f"Subject case: {subject_dir}")
        typer.echo(f"Template case: {template_dir}")
        typer.echo(
            f"Vertices: {synthetic.template.vertex_count}  Deformation max |mu|: {synthetic.deformation.mu.max_abs:.4f}"
        )
