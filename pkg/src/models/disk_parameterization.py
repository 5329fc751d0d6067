"""DiskParameterization model: per-vertex coordinates on the unit disk."""

import numpy as np
from pydantic import Field, field_validator, model_validator

from ..lib.config import BOUNDARY_RADIUS_TOLERANCE
from .base import ArrayModel, as_readonly_array


class DiskParameterization(ArrayModel):
    """
    Flattened patch on the closed unit disk.

    Fields:
        uv: (nv, 2) dimensionless disk coordinates
        boundary_ids: boundary vertex loop, counter-clockwise

    The flip-free invariant needs the faces and is checked by
    ``mesh_topology.assert_flip_free``.
    """

    uv: np.ndarray = Field(..., description="Disk coordinates (nv, 2)")
    boundary_ids: np.ndarray = Field(..., description="Ordered boundary vertex loop")

    @field_validator("uv", mode="before")
    @classmethod
    def validate_uv(cls, v):
        array = as_readonly_array(v, float, (None, 2), "uv")
        if not np.all(np.isfinite(array)):
            raise ValueError("uv must be finite")
        return array

    @field_validator("boundary_ids", mode="before")
    @classmethod
    def validate_boundary_ids(cls, v):
        return as_readonly_array(v, np.int64, (None,), "boundary_ids")

    @model_validator(mode="after")
    def validate_radii(self) -> "DiskParameterization":
        radii = np.linalg.norm(self.uv, axis=1)
        if np.any(radii > 1.0 + BOUNDARY_RADIUS_TOLERANCE):
            raise ValueError("uv leaves the unit disk")
        if len(self.boundary_ids) < 3:
            raise ValueError("boundary loop needs at least 3 vertices")
        if self.boundary_ids.min() < 0 or self.boundary_ids.max() >= len(self.uv):
            raise ValueError("boundary id out of range")
        off_circle = np.abs(radii[self.boundary_ids] - 1.0)
        if np.any(off_circle > BOUNDARY_RADIUS_TOLERANCE):
            raise ValueError("boundary vertices must lie on the unit circle")
        return self

    @property
    def vertex_count(self) -> int:
        return int(self.uv.shape[0])

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(len(self.uv), dtype=bool)
        mask[self.boundary_ids] = False
        return mask
