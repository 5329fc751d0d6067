"""Unit tests for disk flattening and conformal refinement."""

import numpy as np
import pytest

from src.lib.errors import NotADisk
from src.models.cortical_mesh import CorticalMesh
from src.services.flattening import (
    boundary_circle_positions,
    conformal_error,
    flatten_mesh,
    harmonic_disk_map,
    refine_with_trace,
    uniform_mean_value_residual,
)
from src.services.mesh_topology import count_flipped
from src.services.synthetic_data import disk_mesh, ring_count


@pytest.fixture
def bowl(hex_disk):
    """The hex disk lifted onto a paraboloid, so the patch is curved."""
    vertices = np.array(hex_disk.vertices)
    vertices[:, 2] = 0.4 * (vertices[:, 0] ** 2 + vertices[:, 1] ** 2)
    return CorticalMesh(vertices=vertices, faces=hex_disk.faces)


def bumpy_disk(rng):
    """Hexagonal disk with jittered interior vertices and a random Gaussian bump in z."""
    resolution = int(rng.integers(37, 218))
    mesh = disk_mesh(resolution)
    vertices = np.array(mesh.vertices)
    rings = ring_count(resolution)
    interior = np.linalg.norm(vertices[:, :2], axis=1) < 1.0 - 1e-9
    vertices[interior, :2] += rng.uniform(-0.1, 0.1, size=(int(interior.sum()), 2)) / rings
    centre = rng.uniform(-0.4, 0.4, size=2)
    spread = rng.uniform(0.3, 0.6)
    height = rng.uniform(-0.25, 0.25)
    vertices[:, 2] = height * np.exp(-np.sum((vertices[:, :2] - centre) ** 2, axis=1) / (2.0 * spread ** 2))
    return CorticalMesh(vertices=vertices, faces=mesh.faces)


class TestHarmonicDiskMap:
    """Tests for harmonic_disk_map."""

    @pytest.mark.parametrize("weighting", ["cotangent", "uniform"])
    def test_flip_free_and_on_disk(self, bowl, weighting):
        param = harmonic_disk_map(bowl, weighting=weighting)
        radii = np.linalg.norm(param.uv, axis=1)

        assert count_flipped(param.uv, bowl.faces) == 0
        assert np.allclose(radii[param.boundary_ids], 1.0)
        assert np.all(radii <= 1.0 + 1e-9)

    def test_uniform_weights_give_neighbour_averages(self, bowl):
        param = harmonic_disk_map(bowl, weighting="uniform")

        assert uniform_mean_value_residual(bowl, param) < 1e-9

    def test_random_patches_land_on_the_disk_without_flips(self):
        rng = np.random.default_rng(17)

        for _ in range(100):
            mesh = bumpy_disk(rng)
            param = harmonic_disk_map(mesh)

            radii = np.linalg.norm(param.uv[param.boundary_ids], axis=1)
            assert np.max(np.abs(radii - 1.0)) <= 1e-9
            assert count_flipped(param.uv, mesh.faces) == 0

    def test_flat_disk_maps_to_itself_up_to_rotation(self, hex_disk):
        xy = np.asarray(hex_disk.vertices)[:, :2]
        uv = harmonic_disk_map(hex_disk).uv

        u, _, vt = np.linalg.svd(xy.T @ uv)
        rotation = u @ vt

        assert np.linalg.det(rotation) > 0.0
        assert np.max(np.abs(xy @ rotation - uv)) <= 1e-6

    def test_hexagonal_fan(self):
        fan = disk_mesh(7)
        param = harmonic_disk_map(fan)
        boundary = param.uv[param.boundary_ids]
        steps = np.diff(np.unwrap(np.arctan2(boundary[:, 1], boundary[:, 0])))

        assert np.allclose(param.uv[0], [0.0, 0.0], atol=1e-12)
        assert np.allclose(steps, np.pi / 3.0, atol=1e-12)

    def test_first_boundary_vertex_at_angle_zero(self, bowl):
        param = harmonic_disk_map(bowl)
        first = param.uv[param.boundary_ids[0]]

        assert np.allclose(first, [1.0, 0.0])

    def test_unknown_weighting(self, bowl):
        with pytest.raises(ValueError, match="weighting"):
            harmonic_disk_map(bowl, weighting="mean-value")

    def test_closed_surface_is_rejected(self, tetrahedron):
        with pytest.raises(NotADisk):
            harmonic_disk_map(tetrahedron)


class TestBoundaryCirclePositions:
    """Tests for boundary_circle_positions."""

    def test_arc_length_spacing(self):
        square = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
        positions = boundary_circle_positions(square, np.arange(4))

        angles = np.mod(np.arctan2(positions[:, 1], positions[:, 0]), 2 * np.pi)
        assert np.allclose(angles, [0.0, np.pi / 2, np.pi, 3 * np.pi / 2])


class TestConformalRefine:
    """Tests for refine_with_trace and flatten_mesh."""

    def test_zero_iterations_returns_input(self, bowl):
        param = harmonic_disk_map(bowl)
        refined, trace = refine_with_trace(bowl, param, 0)

        assert refined is param
        assert trace == [conformal_error(bowl, param).mean_abs]

    def test_distortion_never_increases(self, bowl):
        param = harmonic_disk_map(bowl)
        refined, trace = refine_with_trace(bowl, param, 3)

        assert len(trace) >= 1
        assert all(later <= earlier for earlier, later in zip(trace, trace[1:]))
        assert count_flipped(refined.uv, bowl.faces) == 0
        assert np.array_equal(refined.uv[refined.boundary_ids], param.uv[param.boundary_ids])

    def test_negative_iterations(self, bowl):
        with pytest.raises(ValueError):
            refine_with_trace(bowl, harmonic_disk_map(bowl), -1)

    def test_flatten_mesh_is_deterministic(self, bowl):
        first = flatten_mesh(bowl, refine_iterations=1)
        second = flatten_mesh(bowl, refine_iterations=1)

        assert np.array_equal(first.uv, second.uv)

    def test_conformal_error_of_planar_identity_is_zero(self, hex_disk, hex_param):
        summary = conformal_error(hex_disk, hex_param)

        assert summary.max_abs < 1e-12
        assert len(summary.per_face) == hex_disk.face_count
