"""Stimulus, HRF, BOLD and goodness-of-fit models for the pRF forward model."""

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..lib.config import (
    DEFAULT_PEAK_DELAY,
    DEFAULT_PEAK_DISPERSION,
    DEFAULT_UNDERSHOOT_DELAY,
    DEFAULT_UNDERSHOOT_DISPERSION,
    DEFAULT_UNDERSHOOT_RATIO,
    MIN_SERIES_LENGTH,
)
from .base import ArrayModel, as_readonly_array


class Stimulus(ArrayModel):
    """
    Time-ordered binary aperture images.

    Fields:
        frames: (nframes, h, w) 0/1 apertures; row 0 is the top of the field
        field_extent: Degrees spanned by each axis (the grid covers +-extent/2)
        tr: Seconds per frame
    """

    frames: np.ndarray = Field(..., description="Apertures (nframes, h, w)")
    field_extent: float = Field(..., gt=0, description="Degrees spanned per axis")
    tr: float = Field(..., gt=0, description="Seconds per frame")

    @field_validator("frames", mode="before")
    @classmethod
    def validate_frames(cls, v):
        array = np.asarray(v)
        if array.ndim != 3 or array.shape[0] == 0:
            raise ValueError("frames must be a nonempty (nframes, h, w) stack")
        if array.shape[1] < 2 or array.shape[2] < 2:
            raise ValueError("aperture grid must be at least 2 x 2")
        if not np.all((array == 0) | (array == 1)):
            raise ValueError("frames must be binary")
        return as_readonly_array(array, np.uint8, None, "frames")

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def grid_resolution(self) -> tuple:
        return int(self.frames.shape[1]), int(self.frames.shape[2])

    @property
    def spacing(self) -> tuple:
        """Sample spacing (dy, dx) in degrees."""
        h, w = self.grid_resolution
        return self.field_extent / (h - 1), self.field_extent / (w - 1)

    def sample_coordinates(self) -> tuple:
        """Visual-field coordinates (x, y) of every grid sample, each (h, w)."""
        h, w = self.grid_resolution
        half = self.field_extent / 2.0
        xs = np.linspace(-half, half, w)
        ys = np.linspace(half, -half, h)
        return np.meshgrid(xs, ys)


class HRFParams(BaseModel):
    """Double-gamma hemodynamic response parameters (seconds)."""

    model_config = ConfigDict(frozen=True)

    peak_delay: float = Field(DEFAULT_PEAK_DELAY, gt=0)
    undershoot_delay: float = Field(DEFAULT_UNDERSHOOT_DELAY, gt=0)
    peak_dispersion: float = Field(DEFAULT_PEAK_DISPERSION, gt=0)
    undershoot_dispersion: float = Field(DEFAULT_UNDERSHOOT_DISPERSION, gt=0)
    undershoot_ratio: float = Field(DEFAULT_UNDERSHOOT_RATIO, ge=0)


class BoldSeries(ArrayModel):
    """
    Per-vertex BOLD time series.

    Fields:
        samples: (nv, nt) BOLD values, arbitrary units
        tr: Seconds per sample
        vertex_ids: (nv,) vertex index of every row
    """

    samples: np.ndarray = Field(..., description="Time series (nv, nt)")
    tr: float = Field(..., gt=0)
    vertex_ids: Optional[np.ndarray] = Field(None, description="Vertex index per row")

    @field_validator("samples", mode="before")
    @classmethod
    def validate_samples(cls, v):
        array = as_readonly_array(v, float, (None, None), "samples")
        if array.shape[1] < MIN_SERIES_LENGTH:
            raise ValueError(f"series length must be at least {MIN_SERIES_LENGTH}")
        if not np.all(np.isfinite(array)):
            raise ValueError("samples must be finite")
        return array

    @field_validator("vertex_ids", mode="before")
    @classmethod
    def validate_vertex_ids(cls, v):
        if v is None:
            return None
        return as_readonly_array(v, np.int64, (None,), "vertex_ids")

    @model_validator(mode="before")
    @classmethod
    def default_vertex_ids(cls, data):
        if isinstance(data, dict) and data.get("vertex_ids") is None and "samples" in data:
            data = {**data, "vertex_ids": np.arange(len(np.asarray(data["samples"])))}
        return data

    @model_validator(mode="after")
    def validate_vertex_count(self) -> "BoldSeries":
        if len(self.vertex_ids) != len(self.samples):
            raise ValueError("vertex_ids must have one entry per series")
        return self

    @property
    def length(self) -> int:
        return int(self.samples.shape[1])

    def series_for(self, vertex: int) -> np.ndarray:
        rows = np.flatnonzero(self.vertex_ids == vertex)
        if rows.size == 0:
            raise KeyError(f"no BOLD series for vertex {vertex}")
        return self.samples[rows[0]]


class FitEntry(BaseModel):
    """Goodness of fit of one predicted series against one observed series."""

    model_config = ConfigDict(frozen=True)

    rmse: float = Field(..., ge=0)
    pearson: float = Field(..., ge=-1.0, le=1.0)
    aic: float
    rss: float = Field(..., ge=0)
    gain: float
    baseline: float
    n: int


class FitMetrics(ArrayModel):
    """
    Per-vertex RMSE, Pearson correlation and AIC with ROI aggregates.

    Invalid vertices (degenerate series) carry NaN and are excluded from the
    aggregates.
    """

    rmse: np.ndarray = Field(..., description="Per-vertex RMSE")
    pearson: np.ndarray = Field(..., description="Per-vertex Pearson correlation")
    aic: np.ndarray = Field(..., description="Per-vertex AIC")
    rss: np.ndarray = Field(..., description="Per-vertex residual sum of squares")
    valid: np.ndarray = Field(..., description="False where the fit was degenerate")

    @field_validator("rmse", "pearson", "aic", "rss", mode="before")
    @classmethod
    def validate_metric(cls, v):
        return as_readonly_array(v, float, (None,), "metric")

    @field_validator("valid", mode="before")
    @classmethod
    def validate_valid(cls, v):
        return as_readonly_array(v, bool, (None,), "valid")

    @model_validator(mode="after")
    def validate_ranges(self) -> "FitMetrics":
        n = len(self.valid)
        if any(len(a) != n for a in (self.rmse, self.pearson, self.aic, self.rss)):
            raise ValueError("metric arrays must share one length")
        v = self.valid
        if np.any(self.rmse[v] < 0) or np.any(np.abs(self.pearson[v]) > 1.0):
            raise ValueError("rmse must be >= 0 and pearson within [-1, 1]")
        return self

    def aggregate(self, mask: Optional[np.ndarray] = None) -> dict:
        """Mean RMSE, Pearson and AIC over valid (and optionally masked) vertices."""
        selected = self.valid if mask is None else (self.valid & mask)
        if not np.any(selected):
            return {"rmse": float("nan"), "pearson": float("nan"), "aic": float("nan"), "count": 0}
        return {
            "rmse": float(np.mean(self.rmse[selected])),
            "pearson": float(np.mean(self.pearson[selected])),
            "aic": float(np.mean(self.aic[selected])),
            "count": int(np.count_nonzero(selected)),
        }


class AngleConvention(str, Enum):
    """Polar-angle conventions accepted at ingestion."""
    MATH_CCW = "math_ccw_from_positive_x"
    CW_FROM_UPPER_VERTICAL = "cw_from_upper_vertical"


class PrfParameters(ArrayModel):
    """
    pRF parameters of every vertex, in the internal convention.

    Fields:
        visual: (nv, 2) Cartesian visual coordinates, degrees
        prf_size: (nv,) sigma, degrees
        variance_explained: (nv,) R^2
        prf_tool: Producing tool label
        angle_convention: Convention the angles were declared in on disk
    """

    visual: np.ndarray
    prf_size: np.ndarray
    variance_explained: np.ndarray
    prf_tool: str = Field("synthetic")
    angle_convention: AngleConvention = Field(AngleConvention.MATH_CCW)

    @field_validator("visual", mode="before")
    @classmethod
    def validate_visual(cls, v):
        array = as_readonly_array(v, float, (None, 2), "visual")
        if not np.all(np.isfinite(array)):
            raise ValueError("visual coordinates must be finite")
        return array

    @field_validator("prf_size", "variance_explained", mode="before")
    @classmethod
    def validate_vector(cls, v):
        return as_readonly_array(v, float, (None,), "vector")

    @model_validator(mode="after")
    def validate_lengths(self) -> "PrfParameters":
        n = len(self.visual)
        if len(self.prf_size) != n or len(self.variance_explained) != n:
            raise ValueError("pRF columns must have equal lengths")
        return self

    @property
    def vertex_count(self) -> int:
        return int(len(self.visual))
