"""Main CLI entry point for the retinotopic registration toolkit."""

from pathlib import Path
from typing import List, Optional

import typer

from .. import __version__
from ..lib.config import (
    DEFAULT_BOLD_SNR,
    DEFAULT_FRAMES_PER_SWEEP,
    DEFAULT_MESH_RESOLUTION,
    DEFAULT_N_SWEEPS,
    DEFAULT_PEAK_DELAY,
    DEFAULT_R2_BASE,
    DEFAULT_R2_DECAY,
    DEFAULT_R2_THRESHOLD,
    DEFAULT_STIMULUS_RESOLUTION,
    DEFAULT_UNDERSHOOT_DELAY,
    DEFAULT_UNDERSHOOT_RATIO,
)
from ..lib.logging import configure_logging
from .common import CliState, get_state
from .evaluate import evaluate_command
from .flatten import flatten_command
from .pipeline import pipeline_command
from .predict_bold import predict_bold_command
from .register import register_command
from .report import report_command
from .synth import synth_command

app = typer.Typer(
    name="drrm",
    help="Diffeomorphic registration of retinotopic maps on flattened cortical patches",
)


@app.callback()
def global_options(
    ctx: typer.Context,
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (default 42)"),
    config: Optional[Path] = typer.Option(None, "--config", help="key = value configuration file"),
    jobs: int = typer.Option(1, "--jobs", min=1, help="Parallel jobs across case directories"),
    quiet: bool = typer.Option(False, "--quiet", help="Only log warnings and errors"),
):
    """Global options shared by every sub-command."""
    configure_logging(level="WARNING" if quiet else None)
    ctx.obj = CliState(seed=seed, config=config, jobs=jobs, quiet=quiet)


@app.command()
def flatten(
    mesh_file: Path = typer.Argument(..., help="Input RETMESH file"),
    output_file: Path = typer.Argument(..., help="Output RETUV file"),
    refine: int = typer.Option(0, "--refine", min=0, help="Conformal refine passes"),
    plot: Optional[Path] = typer.Option(None, "--plot", help="Write the disk wireframe coloured by |mu| as SVG"),
    weighting: str = typer.Option("cotangent", "--weighting", help="Edge weights: cotangent or uniform"),
):
    """Flatten a disk-topology mesh patch onto the unit disk."""
    flatten_command(mesh_file=mesh_file, output_file=output_file, refine=refine, plot=plot, weighting=weighting)


@app.command()
def register(
    ctx: typer.Context,
    subject: Path = typer.Option(..., "--subject", help="Subject case directory"),
    template: Path = typer.Option(..., "--template", help="Template case directory"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    config: Optional[Path] = typer.Option(None, "--config", help="key = value configuration file"),
    smooth_convention: Optional[str] = typer.Option(
        None, "--smooth-convention", help="Smoothness term: displacement or absolute"
    ),
    dump_mu: bool = typer.Option(False, "--dump-mu", help="Also write the Beltrami coefficient of f"),
):
    """Register a subject map to a template map."""
    register_command(
        state=get_state(ctx),
        subject_dir=subject,
        template_dir=template,
        output_dir=out,
        config_file=config,
        smooth_convention=smooth_convention,
        dump_mu=dump_mu,
    )


@app.command()
def evaluate(
    ctx: typer.Context,
    subject: Path = typer.Option(..., "--subject", help="Subject case directory"),
    template: Path = typer.Option(..., "--template", help="Template case directory"),
    registration: Path = typer.Option(..., "--registration", help="Output directory of a register run"),
    out: Path = typer.Option(..., "--out", help="Report output directory"),
    dv_weighting: str = typer.Option("none", "--dv-weighting", help="d|v| mean: none or r2"),
    r2_threshold: float = typer.Option(DEFAULT_R2_THRESHOLD, "--r2-threshold", help="Vertex inclusion cutoff"),
    svg: bool = typer.Option(True, "--svg/--no-svg", help="Also write report.svg"),
    detail: bool = typer.Option(False, "--detail", help="Also write the vertex-level table"),
):
    """Evaluate a registration: d|v|, F_flip, RMSE, correlation and AIC."""
    evaluate_command(
        state=get_state(ctx),
        subject_dir=subject,
        template_dir=template,
        registration_dir=registration,
        output_dir=out,
        dv_weighting=dv_weighting,
        r2_threshold=r2_threshold,
        svg=svg,
        detail=detail,
    )


@app.command()
def synth(
    ctx: typer.Context,
    out: Path = typer.Option(..., "--out", help="Output directory (subject/ and template/ are created)"),
    resolution: int = typer.Option(DEFAULT_MESH_RESOLUTION, "--resolution", help="Target vertex count"),
    mu_max: float = typer.Option(0.4, "--mu-max", help="Max |mu| of the ground-truth deformation"),
    noise_sd: float = typer.Option(0.5, "--noise-sd", help="Visual-coordinate noise SD, degrees"),
    bands: int = typer.Option(1, "--bands", help="Polar-angle bands: 1 or 3"),
    bold_snr: float = typer.Option(DEFAULT_BOLD_SNR, "--bold-snr", help="BOLD signal SD over noise SD"),
    hemisphere: str = typer.Option("L", "--hemisphere", help="Hemisphere label: L or R"),
    r2_base: float = typer.Option(DEFAULT_R2_BASE, "--r2-base", help="Variance explained at eccentricity 0"),
    r2_decay: float = typer.Option(DEFAULT_R2_DECAY, "--r2-decay", help="Variance-explained decay per degree"),
    n_sweeps: int = typer.Option(DEFAULT_N_SWEEPS, "--n-sweeps", help="Bar orientations"),
    frames_per_sweep: int = typer.Option(DEFAULT_FRAMES_PER_SWEEP, "--frames-per-sweep", help="Frames per sweep"),
    stimulus_resolution: int = typer.Option(
        DEFAULT_STIMULUS_RESOLUTION, "--stimulus-resolution", help="Stimulus grid size per axis"
    ),
):
    """Generate a synthetic subject/template case pair with known ground truth."""
    synth_command(
        state=get_state(ctx),
        output_dir=out,
        resolution=resolution,
        mu_max=mu_max,
        noise_sd=noise_sd,
        bands=bands,
        bold_snr=bold_snr,
        hemisphere=hemisphere,
        r2_base=r2_base,
        r2_decay=r2_decay,
        n_sweeps=n_sweeps,
        frames_per_sweep=frames_per_sweep,
        stimulus_resolution=stimulus_resolution,
    )


@app.command("predict-bold")
def predict_bold(
    prf_file: Path = typer.Argument(..., help="pRF CSV (vertex,ecc,ang,sigma,r2)"),
    stimulus_file: Path = typer.Argument(..., help="RETSTIM stimulus file"),
    output_file: Path = typer.Argument(..., help="Output BOLD CSV"),
    peak_delay: float = typer.Option(DEFAULT_PEAK_DELAY, "--peak-delay", help="HRF peak delay, seconds"),
    undershoot_delay: float = typer.Option(
        DEFAULT_UNDERSHOOT_DELAY, "--undershoot-delay", help="HRF undershoot delay, seconds"
    ),
    undershoot_ratio: float = typer.Option(DEFAULT_UNDERSHOOT_RATIO, "--undershoot-ratio", help="HRF undershoot ratio"),
):
    """Predict BOLD series from pRF parameters and a stimulus."""
    predict_bold_command(
        prf_file=prf_file,
        stimulus_file=stimulus_file,
        output_file=output_file,
        peak_delay=peak_delay,
        undershoot_delay=undershoot_delay,
        undershoot_ratio=undershoot_ratio,
    )


@app.command()
def report(
    report_files: List[Path] = typer.Argument(..., help="report.csv files to merge"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    formats: str = typer.Option("text,csv", "--format", help="Comma-separated formats: text, csv, svg"),
):
    """Merge report CSVs (for example both hemispheres) into one table."""
    report_command(report_files=report_files, output_dir=out, formats=formats)


@app.command()
def pipeline(
    ctx: typer.Context,
    case: List[Path] = typer.Option(..., "--case", help="Subject case directory (repeatable)"),
    template: Path = typer.Option(..., "--template", help="Template case directory"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    config: Optional[Path] = typer.Option(None, "--config", help="key = value configuration file"),
    refine: int = typer.Option(0, "--refine", min=0, help="Conformal refine passes when flattening"),
    weighting: str = typer.Option("cotangent", "--weighting", help="Flattening edge weights"),
    dv_weighting: str = typer.Option("none", "--dv-weighting", help="d|v| mean: none or r2"),
    smooth_convention: Optional[str] = typer.Option(
        None, "--smooth-convention", help="Smoothness term: displacement or absolute"
    ),
    detail: bool = typer.Option(False, "--detail", help="Also write the vertex-level table"),
):
    """Run flatten, register, evaluate and report end to end."""
    pipeline_command(
        state=get_state(ctx),
        case_dirs=case,
        template_dir=template,
        output_dir=out,
        config_file=config,
        refine=refine,
        weighting=weighting,
        dv_weighting=dv_weighting,
        smooth_convention=smooth_convention,
        detail=detail,
    )


@app.command()
def version():
    """Print the package version."""
    typer.echo(__version__)


def main():
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
