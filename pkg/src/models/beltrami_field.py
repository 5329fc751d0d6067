"""BeltramiField model: per-face complex Beltrami coefficients."""

import numpy as np
from pydantic import Field, field_validator

from .base import ArrayModel, as_readonly_array


class BeltramiField(ArrayModel):
    """Per-face Beltrami coefficient mu = f_zbar / f_z of a piecewise-linear map."""

    mu: np.ndarray = Field(..., description="Per-face complex coefficients (nf,)")

    @field_validator("mu", mode="before")
    @classmethod
    def validate_mu(cls, v):
        array = as_readonly_array(v, complex, (None,), "mu")
        if not np.all(np.isfinite(array)):
            raise ValueError("mu must be finite")
        return array

    @property
    def face_count(self) -> int:
        return int(self.mu.shape[0])

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.mu)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.mu))) if self.mu.size else 0.0

    @property
    def mean_abs(self) -> float:
        return float(np.mean(np.abs(self.mu))) if self.mu.size else 0.0


class ConformalErrorSummary(ArrayModel):
    """|mu| statistics of a surface-to-disk map."""

    per_face: np.ndarray = Field(..., description="|mu| per face")
    mean_abs: float = Field(..., ge=0)
    max_abs: float = Field(..., ge=0)

    @field_validator("per_face", mode="before")
    @classmethod
    def validate_per_face(cls, v):
        return as_readonly_array(v, float, (None,), "per_face")

    @classmethod
    def from_field(cls, field: BeltramiField) -> "ConformalErrorSummary":
        return cls(per_face=field.abs, mean_abs=field.mean_abs, max_abs=field.max_abs)
