"""Unit tests for SVG disk plots."""

import numpy as np
import pytest

from src.services.plotting import face_values, plot_disk_map, plot_disk_wireframe


class TestFaceValues:
    def test_scalar_mean(self):
        values = face_values(np.array([[0, 1, 2]]), np.array([1.0, 2.0, 6.0]))

        assert values.tolist() == [3.0]

    def test_angle_mean_wraps_across_the_seam(self):
        values = face_values(np.array([[0, 1, 2]]), np.array([179.0, -179.0, 179.0]), mode="angle")

        assert values[0] == pytest.approx(179.667, abs=1e-3)


class TestPlotDiskMap:
    """Tests for plot_disk_map and plot_disk_wireframe."""

    def test_identical_inputs_give_identical_svg(self, hex_disk, hex_param):
        values = np.asarray(hex_param.uv)[:, 0]
        first = plot_disk_map(hex_param.uv, hex_disk.faces, values, title="u")
        second = plot_disk_map(hex_param.uv, hex_disk.faces, values, title="u")

        assert first.lstrip().startswith("<?xml")
        assert first == second

    def test_constant_field(self, hex_disk, hex_param):
        svg = plot_disk_map(hex_param.uv, hex_disk.faces, np.ones(hex_disk.vertex_count), label="ones")

        assert "<svg" in svg

    def test_angle_mode(self, hex_disk, hex_param):
        uv = np.asarray(hex_param.uv)
        svg = plot_disk_map(uv, hex_disk.faces, np.degrees(np.arctan2(uv[:, 1], uv[:, 0])), mode="angle")

        assert "<svg" in svg

    def test_unknown_mode(self, hex_disk, hex_param):
        with pytest.raises(ValueError, match="mode"):
            plot_disk_map(hex_param.uv, hex_disk.faces, np.zeros(hex_disk.vertex_count), mode="hue")

    def test_non_finite_values(self, hex_disk, hex_param):
        values = np.zeros(hex_disk.vertex_count)
        values[4] = np.nan

        with pytest.raises(ValueError, match="finite"):
            plot_disk_map(hex_param.uv, hex_disk.faces, values)

    def test_wireframe(self, hex_disk, hex_param):
        svg = plot_disk_wireframe(hex_param.uv, hex_disk.faces, np.linspace(0.0, 0.5, hex_disk.face_count))

        assert "<svg" in svg
