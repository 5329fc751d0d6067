"""Unit tests for the pRF forward model and fit metrics."""

import numpy as np
import pytest
from scipy.stats import gamma

from src.lib.errors import DegenerateSeries, SigmaNonPositive
from src.models.prf import BoldSeries, HRFParams, Stimulus
from src.services.prf_model import (
    akaike,
    canonical_hrf,
    convolve_rows,
    fit_gain_and_metrics,
    fit_series,
    pearson,
    predict_bold,
    predict_bold_batch,
    prf_drive,
    prf_drive_batch,
)
from src.services.synthetic_data import synth_bar_stimulus


@pytest.fixture
def full_field():
    """Four frames of a fully open aperture spanning 20 degrees."""
    return Stimulus(frames=np.ones((4, 41, 41), dtype=np.uint8), field_extent=20.0, tr=1.0)


class TestDrive:
    """Tests for prf_drive."""

    def test_full_field_drive_integrates_to_one(self, full_field):
        drive = prf_drive(full_field, 0.0, 0.0, 2.0)

        assert drive.shape == (4,)
        assert np.allclose(drive, 1.0, atol=1e-3)

    def test_blank_frames_give_zero_drive(self):
        stimulus = Stimulus(frames=np.zeros((2, 11, 11), dtype=np.uint8), field_extent=10.0, tr=1.0)

        assert np.array_equal(prf_drive(stimulus, 1.0, -1.0, 1.0), [0.0, 0.0])

    def test_non_positive_sigma(self, full_field):
        with pytest.raises(SigmaNonPositive):
            prf_drive(full_field, 0.0, 0.0, 0.0)

    def test_drive_is_additive_over_disjoint_apertures(self):
        frames = np.zeros((3, 41, 41), dtype=np.uint8)
        frames[0, :, :20] = 1
        frames[1, :, 20:] = 1
        frames[2] = 1
        stimulus = Stimulus(frames=frames, field_extent=20.0, tr=1.0)

        drive = prf_drive_batch(stimulus, np.array([-1.0, 4.0]), np.array([0.5, -2.0]), np.array([1.0, 3.0]))

        assert np.allclose(drive[:, 2], drive[:, 0] + drive[:, 1], rtol=1e-12, atol=1e-15)

    def test_bar_centred_on_the_prf_drives_it_most(self):
        stimulus = synth_bar_stimulus(n_sweeps=1, frames_per_sweep=21, extent=20.0, resolution=101, tr=1.0)

        drive = prf_drive(stimulus, 3.0, 0.0, 1.0)

        assert int(np.argmax(drive[:21])) == 13


class TestHrf:
    def test_peak_normalised_at_peak_delay(self):
        kernel = canonical_hrf(tr=1.0)

        assert kernel.max() == 1.0
        assert int(np.argmax(kernel)) == 6
        assert len(kernel) == 32

    def test_undershoot_is_negative(self):
        kernel = canonical_hrf()

        assert kernel[16] < 0.0

    def test_without_undershoot_the_kernel_is_the_peak_gamma(self):
        kernel = canonical_hrf(HRFParams(undershoot_ratio=0.0), tr=1.0)
        t = np.arange(0.0, 32.0, 1.0)
        expected = gamma.pdf(t, 7.0, scale=1.0)

        assert np.all(kernel >= 0.0)
        assert np.allclose(kernel, expected / expected.max(), atol=1e-15)

    def test_duration_shorter_than_peak(self):
        with pytest.raises(ValueError):
            canonical_hrf(HRFParams(), duration=3.0)

    def test_convolution_with_impulse_is_identity(self):
        drive = np.array([[1.0, 2.0, 0.0, -1.0]])

        assert np.array_equal(convolve_rows(drive, np.array([1.0])), drive)

    def test_convolution_is_causal_and_truncated(self):
        drive = np.array([[1.0, 0.0, 0.0]])

        assert convolve_rows(drive, np.array([0.5, 0.25, 0.125, 0.0625])).tolist() == [[0.5, 0.25, 0.125]]


class TestPredictBold:
    def test_batch_matches_single(self, full_field):
        kernel = np.array([1.0, 0.5])
        single = predict_bold(full_field, 1.0, -2.0, 1.5, kernel)
        batch = predict_bold_batch(full_field, np.array([[1.0, -2.0]]), np.array([1.5]), kernel)

        assert np.allclose(batch[0], single)


class TestFitMetrics:
    """Tests for fit_gain_and_metrics and fit_series."""

    def test_exact_affine_relation(self):
        predicted = np.sin(np.linspace(0, 3, 20))
        observed = 3.0 * predicted + 2.0

        entry = fit_gain_and_metrics(observed, predicted)

        assert entry.gain == pytest.approx(3.0)
        assert entry.baseline == pytest.approx(2.0)
        assert entry.rmse == pytest.approx(0.0, abs=1e-9)
        assert entry.pearson == pytest.approx(1.0)
        assert entry.n == 20

    def test_constant_series_is_degenerate(self):
        with pytest.raises(DegenerateSeries):
            fit_gain_and_metrics(np.ones(10), np.arange(10.0))

    def test_short_series(self):
        with pytest.raises(ValueError):
            fit_gain_and_metrics(np.arange(5.0), np.arange(5.0))

    def test_akaike(self):
        assert akaike(10, 10.0) == pytest.approx(10.0)
        assert akaike(10, 10.0 * np.e) == pytest.approx(20.0)
        assert akaike(100, 100.0, k=5) == pytest.approx(10.0, abs=1e-12)

    def test_known_fit(self):
        predicted = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
        residual = np.array([1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0])

        entry = fit_gain_and_metrics(2.0 * predicted + 1.0 + residual, predicted)

        assert entry.gain == pytest.approx(2.0, abs=1e-12)
        assert entry.baseline == pytest.approx(1.0, abs=1e-12)
        assert entry.rss == pytest.approx(8.0, abs=1e-12)
        assert entry.rmse == pytest.approx(1.0, abs=1e-12)
        assert entry.aic == pytest.approx(10.0, abs=1e-12)
        assert entry.pearson == pytest.approx(2.0 / np.sqrt(5.0), abs=1e-12)

    def test_pearson_by_hand(self):
        assert pearson(np.array([1.0, 2.0, 3.0, 4.0]), np.array([2.0, 4.0, 5.0, 9.0])) == pytest.approx(
            11.0 / np.sqrt(130.0), abs=1e-12
        )

    def test_pearson_ignores_affine_rescaling(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=50), rng.normal(size=50)

        assert pearson(a, 3.0 * b + 7.0) == pytest.approx(pearson(a, b), abs=1e-12)
        assert pearson(a, -2.0 * b) == pytest.approx(-pearson(a, b), abs=1e-12)

    def test_aic_orders_fits_like_rss(self):
        rng = np.random.default_rng(5)
        predicted = rng.normal(size=40)
        close = fit_gain_and_metrics(predicted + 0.1 * rng.normal(size=40), predicted)
        far = fit_gain_and_metrics(predicted + 0.5 * rng.normal(size=40), predicted)

        assert np.sign(far.aic - close.aic) == np.sign(far.rss - close.rss)

    def test_fit_series_marks_degenerate_rows(self):
        predicted = np.vstack([np.arange(10.0), np.arange(10.0)])
        observed = BoldSeries(samples=np.vstack([2.0 * np.arange(10.0), np.ones(10)]), tr=1.0)

        metrics = fit_series(observed, predicted)

        assert metrics.valid.tolist() == [True, False]
        assert np.isnan(metrics.rmse[1])
        assert metrics.aggregate()["count"] == 1

    def test_fit_series_shape_mismatch(self):
        observed = BoldSeries(samples=np.ones((2, 10)) + np.arange(10.0), tr=1.0)

        with pytest.raises(ValueError):
            fit_series(observed, np.ones((3, 10)))
