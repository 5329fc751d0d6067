"""CorticalMesh and TopologyReport models."""

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..lib.config import DEGENERATE_AREA_MM2
from .base import ArrayModel, as_readonly_array


class CorticalMesh(ArrayModel):
    """
    Oriented triangle mesh of a cortical patch.

    Fields:
        vertices: (nv, 3) vertex positions in mm
        faces: (nf, 3) vertex indices, counter-clockwise seen from outside

    Construction checks index bounds, repeated vertices within a face and
    degenerate faces. Manifoldness and connectivity are checked by
    ``validate_topology`` so that invalid meshes can still be reported on.
    """

    vertices: np.ndarray = Field(..., description="Vertex positions (nv, 3), mm")
    faces: np.ndarray = Field(..., description="Vertex-index triples (nf, 3)")

    @field_validator("vertices", mode="before")
    @classmethod
    def validate_vertices(cls, v):
        array = as_readonly_array(v, float, (None, 3), "vertices")
        if not np.all(np.isfinite(array)):
            raise ValueError("vertices must be finite")
        return array

    @field_validator("faces", mode="before")
    @classmethod
    def validate_faces(cls, v):
        array = np.asarray(v)
        if array.size == 0:
            raise ValueError("mesh must have at least one face")
        return as_readonly_array(array, np.int64, (None, 3), "faces")

    @model_validator(mode="after")
    def validate_faces_against_vertices(self) -> "CorticalMesh":
        faces = self.faces
        if faces.min() < 0 or faces.max() >= len(self.vertices):
            raise ValueError("face index out of range")
        repeated = (
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 0] == faces[:, 2])
        )
        if np.any(repeated):
            raise ValueError(f"face {int(np.argmax(repeated))} repeats a vertex")
        p0, p1, p2 = (self.vertices[faces[:, k]] for k in range(3))
        areas = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
        if np.any(areas < DEGENERATE_AREA_MM2):
            raise ValueError(f"face {int(np.argmin(areas))} is degenerate (area < {DEGENERATE_AREA_MM2} mm^2)")
        return self

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def face_count(self) -> int:
        return int(self.faces.shape[0])


class TopologyReport(BaseModel):
    """Topology summary used as the precondition gate for flattening."""

    vertex_count: int = Field(..., description="Number of vertices")
    face_count: int = Field(..., description="Number of faces")
    edge_count: int = Field(..., description="Number of undirected edges")
    boundary_loop_count: int = Field(..., description="Number of boundary loops")
    euler_characteristic: int = Field(..., description="|V| - |E| + |F|")
    is_disk: bool = Field(..., description="Euler characteristic 1 and a single boundary loop")

    @model_validator(mode="after")
    def validate_disk_flag(self) -> "TopologyReport":
        expected = self.euler_characteristic == 1 and self.boundary_loop_count == 1
        if self.is_disk != expected:
            raise ValueError("is_disk must equal (euler == 1 and boundary_loop_count == 1)")
        return self
