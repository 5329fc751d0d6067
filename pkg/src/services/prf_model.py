"""Circular-Gaussian pRF forward model: neural drive, HRF, BOLD prediction and fit metrics."""

from typing import Optional, Union

import numpy as np
from scipy.stats import gamma

from ..lib.config import AIC_PARAMETER_COUNT, DEFAULT_HRF_DURATION, MIN_SERIES_LENGTH, PRF_BATCH_SIZE
from ..lib.errors import DegenerateSeries, SigmaNonPositive
from ..lib.logging import get_logger
from ..models.prf import BoldSeries, FitEntry, FitMetrics, HRFParams, Stimulus

logger = get_logger(__name__)

HrfLike = Union[HRFParams, np.ndarray]


def _check_sigma(sigma: np.ndarray) -> None:
    sigma = np.asarray(sigma, dtype=float)
    bad = ~(sigma > 0) | ~np.isfinite(sigma)
    if np.any(bad):
        raise SigmaNonPositive(f"pRF size must be positive, got {sigma[bad].ravel()[0]!r}")


def prf_drive_batch(stimulus: Stimulus, x: np.ndarray, y: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """
    Neural drive of many pRFs.

    Each drive sample is the aperture-weighted sum of a unit-integral circular
    Gaussian over the stimulus grid, times the per-sample area element.

    Args:
        stimulus: Aperture stack
        x, y: (n,) pRF centres, degrees
        sigma: (n,) pRF sizes, degrees

    Returns:
        (n, nframes) drive

    Raises:
        SigmaNonPositive: If some sigma <= 0
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    _check_sigma(sigma)

    grid_x, grid_y = stimulus.sample_coordinates()
    grid_x, grid_y = grid_x.ravel(), grid_y.ravel()
    dy, dx = stimulus.spacing
    apertures = stimulus.frames.reshape(stimulus.frame_count, -1).astype(float).T

    drive = np.empty((len(x), stimulus.frame_count))
    for start in range(0, len(x), PRF_BATCH_SIZE):
        stop = start + PRF_BATCH_SIZE
        sx, sy, ss = x[start:stop, None], y[start:stop, None], sigma[start:stop, None]
        dist_sq = (grid_x[None] - sx) ** 2 + (grid_y[None] - sy) ** 2
        rf = np.exp(-dist_sq / (2.0 * ss ** 2)) / (2.0 * np.pi * ss ** 2)
        drive[start:stop] = (rf * (dx * dy)) @ apertures
    return drive


def prf_drive(stimulus: Stimulus, x: float, y: float, sigma: float) -> np.ndarray:
    """Neural drive of one pRF, one value per frame."""
    return prf_drive_batch(stimulus, [x], [y], [sigma])[0]


def canonical_hrf(
    params: Optional[HRFParams] = None,
    tr: float = 1.0,
    duration: float = DEFAULT_HRF_DURATION,
) -> np.ndarray:
    """
    Double-gamma HRF sampled every ``tr`` seconds, peak-normalised to 1.

    Both gamma densities have their mode at the respective delay.

    Raises:
        ValueError: If duration is shorter than the peak delay
    """
    params = params or HRFParams()
    if duration < params.peak_delay:
        raise ValueError("HRF duration must cover the peak delay")
    t = np.arange(0.0, duration, tr)
    peak = gamma.pdf(
        t, params.peak_delay / params.peak_dispersion + 1.0, scale=params.peak_dispersion
    )
    undershoot = gamma.pdf(
        t, params.undershoot_delay / params.undershoot_dispersion + 1.0, scale=params.undershoot_dispersion
    )
    kernel = peak - params.undershoot_ratio * undershoot
    return kernel / np.max(kernel)


def convolve_rows(drive: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Causal convolution of every row with the kernel, truncated to the row length."""
    drive = np.atleast_2d(np.asarray(drive, dtype=float))
    kernel = np.asarray(kernel, dtype=float)
    length = drive.shape[1]
    out = np.zeros_like(drive)
    for lag in range(min(len(kernel), length)):
        out[:, lag:] += kernel[lag] * drive[:, : length - lag]
    return out


def _kernel_for(hrf: HrfLike, tr: float) -> np.ndarray:
    if isinstance(hrf, HRFParams):
        return canonical_hrf(hrf, tr)
    return np.asarray(hrf, dtype=float)


def predict_bold(stimulus: Stimulus, x: float, y: float, sigma: float, hrf: HrfLike) -> np.ndarray:
    """
    Predicted BOLD series with unit gain and zero baseline.

    Args:
        hrf: Kernel samples, or HRFParams sampled at the stimulus TR
    """
    return convolve_rows(prf_drive(stimulus, x, y, sigma)[None], _kernel_for(hrf, stimulus.tr))[0]


def predict_bold_batch(stimulus: Stimulus, visual: np.ndarray, sigma: np.ndarray, hrf: HrfLike) -> np.ndarray:
    """(n, nframes) predicted BOLD for per-vertex visual coordinates and sizes."""
    visual = np.asarray(visual, dtype=float).reshape(-1, 2)
    drive = prf_drive_batch(stimulus, visual[:, 0], visual[:, 1], sigma)
    return convolve_rows(drive, _kernel_for(hrf, stimulus.tr))


def akaike(n: int, rss: float, k: int = AIC_PARAMETER_COUNT) -> float:
    """n ln(RSS / n) + 2k, with RSS / n floored at the smallest positive float."""
    return float(n * np.log(max(rss / n, np.finfo(float).tiny)) + 2 * k)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation from centred dot products, clipped to [-1, 1]."""
    ac = a - a.mean()
    bc = b - b.mean()
    denom = np.sqrt((ac @ ac) * (bc @ bc))
    if denom == 0.0:
        raise DegenerateSeries("zero-variance series; correlation undefined")
    return float(np.clip((ac @ bc) / denom, -1.0, 1.0))


def fit_gain_and_metrics(observed: np.ndarray, predicted: np.ndarray) -> FitEntry:
    """
    Fit observed ~ gain * predicted + baseline and score the fit.

    Args:
        observed: (n,) observed series
        predicted: (n,) predicted series

    Returns:
        FitEntry with RMSE, Pearson correlation, AIC (k = 5) and the fitted gain/baseline

    Raises:
        DegenerateSeries: If either series has zero variance
    """
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    n = len(observed)
    if predicted.shape != observed.shape:
        raise ValueError("observed and predicted series must have equal lengths")
    if n < MIN_SERIES_LENGTH:
        raise ValueError(f"series length must be at least {MIN_SERIES_LENGTH}")
    if np.ptp(observed) == 0.0 or np.ptp(predicted) == 0.0:
        raise DegenerateSeries("zero-variance series; correlation undefined")

    design = np.column_stack([predicted, np.ones(n)])
    (gain, baseline), *_ = np.linalg.lstsq(design, observed, rcond=None)
    residual = observed - (gain * predicted + baseline)
    rss = float(residual @ residual)
    return FitEntry(
        rmse=float(np.sqrt(rss / n)),
        pearson=pearson(observed, predicted),
        aic=akaike(n, rss),
        rss=rss,
        gain=float(gain),
        baseline=float(baseline),
        n=n,
    )


def fit_series(observed: BoldSeries, predicted: np.ndarray) -> FitMetrics:
    """
    Per-vertex fit metrics of predicted rows against observed series.

    Degenerate vertices are marked invalid (NaN metrics) instead of raising.
    """
    predicted = np.atleast_2d(np.asarray(predicted, dtype=float))
    if predicted.shape != observed.samples.shape:
        raise ValueError(
            f"predicted shape {predicted.shape} does not match observed {observed.samples.shape}"
        )
    count = len(predicted)
    rmse, corr, aic, rss = (np.full(count, np.nan) for _ in range(4))
    valid = np.zeros(count, dtype=bool)
    for row in range(count):
        try:
            entry = fit_gain_and_metrics(observed.samples[row], predicted[row])
        except DegenerateSeries:
            continue
        rmse[row], corr[row], aic[row], rss[row] = entry.rmse, entry.pearson, entry.aic, entry.rss
        valid[row] = True
    degenerate = count - int(np.count_nonzero(valid))
    if degenerate:
        logger.debug("degenerate_series_skipped", count=degenerate)
    return FitMetrics(rmse=rmse, pearson=corr, aic=aic, rss=rss, valid=valid)
