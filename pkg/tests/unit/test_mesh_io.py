"""Unit tests for RETMESH, RETUV and RETMU readers and writers."""

import numpy as np
import pytest

from src.lib.errors import FormatError, InconsistentOrientation, InvalidMesh
from src.models.beltrami_field import BeltramiField
from src.services.mesh_io import load_mesh, load_mu, load_uv, parse_mesh, parse_uv, save_mesh, save_mu, save_uv

SQUARE = """RETMESH 1
# two triangles
4 2
0 0 0
1 0 0
1 1 0
0 1 0
0 1 2
0 2 3
"""


class TestParseMesh:
    """Tests for parse_mesh."""

    def test_parse_with_comments(self):
        mesh = parse_mesh(SQUARE)

        assert mesh.vertex_count == 4
        assert mesh.face_count == 2
        assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]

    def test_wrong_magic(self):
        with pytest.raises(FormatError, match="expected header"):
            parse_mesh(SQUARE.replace("RETMESH", "OBJ"))

    def test_truncated_file(self):
        with pytest.raises(FormatError, match="unexpected end of file"):
            parse_mesh(SQUARE.rsplit("0 2 3", 1)[0])

    def test_trailing_content(self):
        with pytest.raises(FormatError, match="trailing content"):
            parse_mesh(SQUARE + "1 2 3\n")

    def test_bad_number(self):
        with pytest.raises(FormatError, match="invalid number"):
            parse_mesh(SQUARE.replace("1 1 0", "1 x 0"))

    def test_index_out_of_range(self):
        with pytest.raises(InvalidMesh, match="out of range"):
            parse_mesh(SQUARE.replace("0 2 3", "0 2 9"))

    def test_inconsistent_orientation(self):
        with pytest.raises(InconsistentOrientation):
            parse_mesh(SQUARE.replace("0 2 3", "0 3 2"))


class TestFiles:
    """Tests for file round trips at full precision."""

    def test_mesh_file(self, tmp_path, hex_disk):
        path = save_mesh(hex_disk, tmp_path / "disk.retmesh")
        loaded = load_mesh(path)

        assert np.array_equal(loaded.vertices, hex_disk.vertices)
        assert np.array_equal(loaded.faces, hex_disk.faces)

    def test_uv_file_keeps_every_bit(self, tmp_path):
        uv = np.array([[0.1, 1.0 / 3.0], [-0.7071067811865476, 2.0 ** -40]])
        loaded = load_uv(save_uv(uv, tmp_path / "x.retuv"))

        assert np.array_equal(loaded, uv)

    def test_uv_count_mismatch(self):
        with pytest.raises(FormatError):
            parse_uv("RETUV 1\n3\n0 0\n1 1\n")

    def test_mu_file(self, tmp_path):
        field = BeltramiField(mu=np.array([0.1 + 0.2j, -0.3j, 0.0]))
        loaded = load_mu(save_mu(field, tmp_path / "mu.retmu"))

        assert np.array_equal(loaded.mu, field.mu)
