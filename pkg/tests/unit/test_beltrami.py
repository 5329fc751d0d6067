"""Unit tests for Beltrami coefficient computation, clamping and reconstruction."""

import numpy as np
import pytest

from src.lib.errors import ConformalSingularity, ConstraintInsufficient, DegenerateSourceFace, MuOutOfRange
from src.models.beltrami_field import BeltramiField
from src.services.beltrami import clamp_beltrami, compute_beltrami, linear_beltrami_solve, metric_coefficients
from src.services.mesh_topology import count_flipped, triangle_orientation_signs
from src.services.synthetic_data import disk_mesh, disk_parameterization, synth_deformation


def stretch(points, a, b):
    """Affine map z -> a z + b conj(z) in (x, y) form."""
    z = points[:, 0] + 1j * points[:, 1]
    w = a * z + b * np.conj(z)
    return np.column_stack([w.real, w.imag])


class TestComputeBeltrami:
    """Tests for compute_beltrami."""

    def test_identity_is_conformal(self, hex_disk, hex_param):
        field = compute_beltrami(hex_disk.faces, hex_param.uv, hex_param.uv)

        assert field.face_count == hex_disk.face_count
        assert field.max_abs < 1e-12

    def test_affine_map_has_constant_coefficient(self, hex_disk, hex_param):
        target = stretch(np.asarray(hex_param.uv), 1.0, 0.5 - 0.25j)
        field = compute_beltrami(hex_disk.faces, hex_param.uv, target)

        assert np.allclose(field.mu, 0.5 - 0.25j, atol=1e-12)

    def test_rotation_and_scaling_are_conformal(self, hex_disk, hex_param):
        target = stretch(np.asarray(hex_param.uv), 2.0 * np.exp(0.7j), 0.0)

        assert compute_beltrami(hex_disk.faces, hex_param.uv, target).max_abs < 1e-12

    def test_reflection_is_singular(self, hex_disk, hex_param):
        target = stretch(np.asarray(hex_param.uv), 0.0, -1.0)

        with pytest.raises(ConformalSingularity):
            compute_beltrami(hex_disk.faces, hex_param.uv, target)

    def test_degenerate_source_face(self):
        source = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])

        with pytest.raises(DegenerateSourceFace):
            compute_beltrami(np.array([[0, 1, 2]]), source, source)

    def test_random_affine_maps(self):
        rng = np.random.default_rng(21)
        count = 1000
        a = rng.normal(size=count) + 1j * rng.normal(size=count)
        b = rng.normal(size=count) + 1j * rng.normal(size=count)
        keep = (np.abs(a) > 0.1) & (np.abs(np.abs(a) - np.abs(b)) > 1e-3)
        a, b = a[keep], b[keep]

        unit = np.exp(2j * np.pi * np.arange(3) / 3)
        rotation = np.exp(2j * np.pi * rng.uniform(size=len(a)))
        corners = rng.normal(size=(len(a), 1)) + 1j * rng.normal(size=(len(a), 1))
        corners = corners + rng.uniform(0.5, 2.0, size=(len(a), 1)) * rotation[:, None] * unit[None, :]
        images = a[:, None] * corners + b[:, None] * np.conj(corners)
        faces = np.arange(3 * len(a)).reshape(-1, 3)
        source = np.column_stack([corners.ravel().real, corners.ravel().imag])
        target = np.column_stack([images.ravel().real, images.ravel().imag])

        field = compute_beltrami(faces, source, target)
        signs = triangle_orientation_signs(target, faces)

        assert np.allclose(field.mu, b / a, rtol=1e-12, atol=1e-12)
        assert np.array_equal(signs < 0, np.abs(field.mu) > 1.0)

    def test_orientation_reversing_affine_map(self, hex_disk, hex_param):
        target = stretch(np.asarray(hex_param.uv), 0.5, 1.0)
        field = compute_beltrami(hex_disk.faces, hex_param.uv, target)

        assert np.allclose(np.abs(field.mu), 2.0, atol=1e-12)
        assert np.all(triangle_orientation_signs(target, hex_disk.faces) == -1)
        assert count_flipped(target, hex_disk.faces) == hex_disk.face_count

    def test_horizontal_stretch(self, hex_disk, hex_param):
        uv = np.asarray(hex_param.uv)
        target = np.column_stack([2.0 * uv[:, 0], uv[:, 1]])

        assert np.allclose(np.abs(compute_beltrami(hex_disk.faces, uv, target).mu), 1.0 / 3.0, atol=1e-12)


class TestClamp:
    """Tests for clamp_beltrami."""

    def test_clamps_magnitude_and_keeps_argument(self):
        field = BeltramiField(mu=np.array([0.99j, 0.2, -0.97 + 0.0j]))
        clamped = clamp_beltrami(field, epsilon=0.05)

        assert np.isclose(clamped.mu[0], 0.95j)
        assert clamped.mu[1] == 0.2
        assert np.isclose(clamped.mu[2], -0.95)
        assert clamped.max_abs <= 0.95 + 1e-15

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            clamp_beltrami(BeltramiField(mu=np.zeros(1)), epsilon=1.0)

    def test_metric_has_unit_determinant(self):
        alpha, beta, gamma = metric_coefficients(np.array([0.3 - 0.4j, 0.0, 0.9j]))

        assert np.allclose(alpha * gamma - beta ** 2, 1.0)
        assert np.all(alpha > 0)


class TestLinearBeltramiSolve:
    """Tests for linear_beltrami_solve."""

    def test_zero_field_with_identity_boundary_is_identity(self, hex_disk, hex_param):
        loop = np.asarray(hex_param.boundary_ids)
        uv = np.asarray(hex_param.uv)
        field = BeltramiField(mu=np.zeros(hex_disk.face_count))

        target = linear_beltrami_solve(hex_disk.faces, uv, field, (loop, uv[loop]))

        assert np.allclose(target, uv, atol=1e-9)

    def test_reproduces_affine_map(self, hex_disk, hex_param):
        uv = np.asarray(hex_param.uv)
        loop = np.asarray(hex_param.boundary_ids)
        expected = stretch(uv, 1.0, 0.4)
        field = BeltramiField(mu=np.full(hex_disk.face_count, 0.4 + 0.0j))
        pins = {int(i): tuple(expected[i]) for i in loop}

        target = linear_beltrami_solve(hex_disk.faces, uv, field, pins)

        assert np.allclose(target, expected, atol=1e-9)
        assert np.allclose(compute_beltrami(hex_disk.faces, uv, target).mu, 0.4, atol=1e-8)

    def test_needs_two_pins(self, hex_disk, hex_param):
        field = BeltramiField(mu=np.zeros(hex_disk.face_count))

        with pytest.raises(ConstraintInsufficient):
            linear_beltrami_solve(hex_disk.faces, hex_param.uv, field, {0: (0.0, 0.0)})

    def test_rejects_mu_of_one(self, hex_disk, hex_param):
        loop = np.asarray(hex_param.boundary_ids)
        field = BeltramiField(mu=np.ones(hex_disk.face_count))

        with pytest.raises(MuOutOfRange):
            linear_beltrami_solve(hex_disk.faces, hex_param.uv, field, (loop, np.asarray(hex_param.uv)[loop]))

    def test_reconstructs_random_maps_from_their_own_coefficients(self):
        mesh = disk_mesh(127)
        param = disk_parameterization(mesh, 1.0)
        uv = np.asarray(param.uv)
        loop = np.asarray(param.boundary_ids)
        rng = np.random.default_rng(8)

        for seed in range(50):
            deformation = synth_deformation(mesh.faces, param, rng.uniform(0.1, 0.8), seed=seed)
            a = np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0.5, 2.0)
            b = a * rng.uniform(0.0, 0.6) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            expected = stretch(deformation.ground_truth, a, b)
            field = compute_beltrami(mesh.faces, uv, expected)

            rebuilt = linear_beltrami_solve(mesh.faces, uv, field, (loop, expected[loop]))

            assert count_flipped(expected, mesh.faces) == 0
            assert np.max(np.abs(rebuilt - expected)) <= 1e-8
