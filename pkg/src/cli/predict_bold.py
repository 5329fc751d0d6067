"""Predict-bold CLI command: forward-model BOLD series from a pRF CSV and a stimulus."""

from pathlib import Path

import numpy as np
import typer

from ..lib.logging import get_logger
from ..models.prf import BoldSeries, HRFParams
from ..services.prf_io import load_prf_csv, load_stimulus, save_bold_csv
from ..services.prf_model import predict_bold_batch
from .common import command_errors

logger = get_logger(__name__)


def predict_bold_command(
    prf_file: Path,
    stimulus_file: Path,
    output_file: Path,
    peak_delay: float,
    undershoot_delay: float,
    undershoot_ratio: float,
) -> None:
    """
    Predict unit-gain BOLD series for every vertex and write them as CSV.
    """
    with command_errors("predict-bold"):
        prf = load_prf_csv(prf_file)
        stimulus = load_stimulus(stimulus_file)
        hrf = HRFParams(peak_delay=peak_delay, undershoot_delay=undershoot_delay, undershoot_ratio=undershoot_ratio)
        samples = predict_bold_batch(stimulus, np.asarray(prf.visual), np.asarray(prf.prf_size), hrf)
        save_bold_csv(BoldSeries(samples=samples, tr=stimulus.tr), output_file)

        typer.echo(f"Predicted BOLD: {output_file}")
        typer.echo(f"Vertices: {prf.vertex_count}  Frames: {stimulus.frame_count}  TR: {stimulus.tr}")
