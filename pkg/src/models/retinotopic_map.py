"""RetinotopicMap model shared by subjects and templates."""

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from .base import ArrayModel, as_readonly_array
from .cortical_mesh import CorticalMesh
from .disk_parameterization import DiskParameterization


class Hemisphere(str, Enum):
    """Cortical hemisphere."""
    LEFT = "L"
    RIGHT = "R"


class PrfTool(str, Enum):
    """Tool that produced the pRF parameters."""
    ANALYZE_PRF = "analyze-prf"
    MRVISTA = "mrvista"
    SYNTHETIC = "synthetic"


class RetinotopicMap(ArrayModel):
    """
    Retinotopic map on a flattened cortical patch.

    Fields:
        mesh: Cortical patch geometry (faces F, vertices V)
        param: Disk parameterization of the patch
        visual: (nv, 2) visual-field coordinates, degrees, Cartesian (x, y)
        prf_size: (nv,) pRF size sigma, degrees
        variance_explained: (nv,) R^2 of the pRF fit, at most 1
        hemisphere: Hemisphere label, when known
        prf_tool: Tool that produced the pRF parameters
        registration_valid: After ``apply_registration``, False where the
            template could not be interpolated and the original values were kept
    """

    mesh: CorticalMesh = Field(..., description="Patch geometry")
    param: DiskParameterization = Field(..., description="Disk parameterization")
    visual: np.ndarray = Field(..., description="Visual coordinates (nv, 2), degrees")
    prf_size: np.ndarray = Field(..., description="pRF sigma (nv,), degrees")
    variance_explained: np.ndarray = Field(..., description="R^2 (nv,)")
    hemisphere: Optional[Hemisphere] = Field(None, description="Hemisphere label")
    prf_tool: PrfTool = Field(PrfTool.SYNTHETIC, description="pRF tool label")
    registration_valid: Optional[np.ndarray] = Field(None, description="Interpolation validity mask")

    @field_validator("visual", mode="before")
    @classmethod
    def validate_visual(cls, v):
        array = as_readonly_array(v, float, (None, 2), "visual")
        if not np.all(np.isfinite(array)):
            raise ValueError("visual coordinates must be finite")
        return array

    @field_validator("prf_size", mode="before")
    @classmethod
    def validate_prf_size(cls, v):
        return as_readonly_array(v, float, (None,), "prf_size")

    @field_validator("variance_explained", mode="before")
    @classmethod
    def validate_variance_explained(cls, v):
        array = as_readonly_array(v, float, (None,), "variance_explained")
        if np.any(np.isnan(array)) or np.any(array > 1.0):
            raise ValueError("variance_explained must be in [-inf, 1]")
        return array

    @field_validator("registration_valid", mode="before")
    @classmethod
    def validate_registration_valid(cls, v):
        if v is None:
            return None
        return as_readonly_array(v, bool, (None,), "registration_valid")

    @model_validator(mode="after")
    def validate_lengths(self) -> "RetinotopicMap":
        n = self.mesh.vertex_count
        lengths = {
            "param.uv": self.param.vertex_count,
            "visual": len(self.visual),
            "prf_size": len(self.prf_size),
            "variance_explained": len(self.variance_explained),
        }
        if self.registration_valid is not None:
            lengths["registration_valid"] = len(self.registration_valid)
        mismatched = {k: v for k, v in lengths.items() if v != n}
        if mismatched:
            raise ValueError(f"per-vertex arrays must have {n} entries: {mismatched}")
        fitted = self.variance_explained > 0
        if np.any(~(self.prf_size[fitted] > 0)):
            raise ValueError("prf_size must be positive wherever R^2 > 0")
        return self

    @property
    def vertex_count(self) -> int:
        return self.mesh.vertex_count

    @property
    def faces(self) -> np.ndarray:
        return self.mesh.faces

    @property
    def eccentricity(self) -> np.ndarray:
        return np.hypot(self.visual[:, 0], self.visual[:, 1])

    @property
    def polar_angle_deg(self) -> np.ndarray:
        """Polar angle in degrees, counter-clockwise from +x, in (-180, 180]."""
        angle = np.degrees(np.arctan2(self.visual[:, 1], self.visual[:, 0]))
        return np.where(angle <= -180.0, angle + 360.0, angle)


class TemplateSample(ArrayModel):
    """
    Template values interpolated at query points of the disk.

    Fields:
        visual: (m, 2) interpolated visual coordinates (NaN where invalid)
        prf_size: (m,) interpolated pRF size (NaN where invalid)
        valid: (m,) False for points outside the template beyond the projection band
        face_ids: (m,) containing template face, -1 where invalid
        barycentric: (m, 3) barycentric weights within that face
        projected: (m,) True where the point was snapped onto the boundary
    """

    visual: np.ndarray
    prf_size: np.ndarray
    valid: np.ndarray
    face_ids: np.ndarray
    barycentric: np.ndarray
    projected: np.ndarray

    @field_validator("visual", "barycentric", mode="before")
    @classmethod
    def validate_matrix(cls, v):
        return as_readonly_array(v, float, (None, None), "matrix")

    @field_validator("prf_size", mode="before")
    @classmethod
    def validate_vector(cls, v):
        return as_readonly_array(v, float, (None,), "prf_size")

    @field_validator("valid", "projected", mode="before")
    @classmethod
    def validate_flags(cls, v):
        return as_readonly_array(v, bool, (None,), "flags")

    @field_validator("face_ids", mode="before")
    @classmethod
    def validate_face_ids(cls, v):
        return as_readonly_array(v, np.int64, (None,), "face_ids")

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))
