"""Text readers and writers for meshes (RETMESH), disk coordinates (RETUV) and Beltrami dumps (RETMU)."""

from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..lib.errors import FormatError, InvalidMesh
from ..lib.logging import get_logger
from ..lib.textio import TokenReader, format_row, write_lines
from ..models.beltrami_field import BeltramiField
from ..models.cortical_mesh import CorticalMesh
from .mesh_topology import check_consistent_orientation

logger = get_logger(__name__)

MESH_MAGIC = "RETMESH"
UV_MAGIC = "RETUV"
MU_MAGIC = "RETMU"


def _read_count(reader: TokenReader, what: str) -> int:
    (count,) = reader.read_ints(1)
    if count < 0:
        raise FormatError(f"{reader.source}: negative {what} count")
    return count


def parse_mesh(text: str, source: str = "<mesh>") -> CorticalMesh:
    """
    Parse RETMESH text into a validated CorticalMesh.

    Raises:
        FormatError: If the text is malformed
        InvalidMesh: If indices, repeated vertices or degenerate faces are found
        InconsistentOrientation: If neighbouring faces disagree on orientation
    """
    reader = TokenReader(text, source)
    reader.expect_header(MESH_MAGIC)
    nv, nf = reader.read_ints(2)
    if nv < 3 or nf < 1:
        raise FormatError(f"{source}: a mesh needs at least 3 vertices and 1 face")
    vertices = np.array([reader.read_floats(3) for _ in range(nv)], dtype=float)
    faces = np.array([reader.read_ints(3) for _ in range(nf)], dtype=np.int64)
    reader.ensure_exhausted()

    try:
        mesh = CorticalMesh(vertices=vertices, faces=faces)
    except ValidationError as e:
        raise InvalidMesh(f"{source}: {e.errors()[0]['msg']}") from e
    check_consistent_orientation(mesh.faces)
    return mesh


def load_mesh(path: Path) -> CorticalMesh:
    """Load a RETMESH file."""
    path = Path(path)
    mesh = parse_mesh(path.read_text(encoding="utf-8"), str(path))
    logger.debug("mesh_loaded", path=str(path), vertices=mesh.vertex_count, faces=mesh.face_count)
    return mesh


def render_mesh(mesh: CorticalMesh) -> list:
    lines = [f"{MESH_MAGIC} 1", f"{mesh.vertex_count} {mesh.face_count}"]
    lines.extend(format_row(v) for v in mesh.vertices)
    lines.extend(" ".join(str(int(i)) for i in face) for face in mesh.faces)
    return lines


def save_mesh(mesh: CorticalMesh, path: Path) -> Path:
    """Write a mesh as RETMESH text with round-trip precision."""
    return write_lines(path, render_mesh(mesh))


def parse_uv(text: str, source: str = "<uv>") -> np.ndarray:
    """Parse RETUV text into an (nv, 2) array."""
    reader = TokenReader(text, source)
    reader.expect_header(UV_MAGIC)
    nv = _read_count(reader, "vertex")
    uv = np.array([reader.read_floats(2) for _ in range(nv)], dtype=float).reshape(nv, 2)
    reader.ensure_exhausted()
    if not np.all(np.isfinite(uv)):
        raise FormatError(f"{source}: non-finite coordinate")
    return uv


def load_uv(path: Path) -> np.ndarray:
    """Load a RETUV file as an (nv, 2) array."""
    path = Path(path)
    return parse_uv(path.read_text(encoding="utf-8"), str(path))


def save_uv(uv: np.ndarray, path: Path) -> Path:
    """Write per-vertex 2D coordinates as RETUV text."""
    uv = np.asarray(uv, dtype=float)
    lines = [f"{UV_MAGIC} 1", str(len(uv))]
    lines.extend(format_row(p) for p in uv)
    return write_lines(path, lines)


def load_mu(path: Path) -> BeltramiField:
    """Load a RETMU dump."""
    path = Path(path)
    reader = TokenReader.from_path(path)
    reader.expect_header(MU_MAGIC)
    nf = _read_count(reader, "face")
    values = np.array([reader.read_floats(2) for _ in range(nf)], dtype=float).reshape(nf, 2)
    reader.ensure_exhausted()
    return BeltramiField(mu=values[:, 0] + 1j * values[:, 1])


def save_mu(field: BeltramiField, path: Path) -> Path:
    """Write a Beltrami field as RETMU text (``re im`` per face)."""
    lines = [f"{MU_MAGIC} 1", str(field.face_count)]
    lines.extend(format_row((m.real, m.imag)) for m in field.mu)
    return write_lines(path, lines)
