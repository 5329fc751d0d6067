"""Unit tests for template point location and barycentric interpolation."""

import numpy as np
import pytest

from src.models.cortical_mesh import CorticalMesh
from src.models.disk_parameterization import DiskParameterization
from src.models.retinotopic_map import RetinotopicMap
from src.services.template_interpolation import (
    TemplateInterpolator,
    barycentric_weights,
    incident_faces,
    interpolate_template,
)

SPOKES = 24


@pytest.fixture
def fan_template():
    """Disk fan with one centre vertex of valence 24, faces stored in shuffled order."""
    angles = 2 * np.pi * np.arange(SPOKES) / SPOKES
    uv = np.vstack([[0.0, 0.0], np.column_stack([np.cos(angles), np.sin(angles)])])
    ring = np.arange(1, SPOKES + 1)
    faces = np.column_stack([np.zeros(SPOKES, dtype=int), ring, np.roll(ring, -1)])
    faces = faces[np.random.default_rng(11).permutation(SPOKES)]
    mesh = CorticalMesh(vertices=np.column_stack([uv, np.zeros(len(uv))]), faces=faces)
    return RetinotopicMap(
        mesh=mesh,
        param=DiskParameterization(uv=uv, boundary_ids=ring),
        visual=3.0 * uv,
        prf_size=np.ones(len(uv)),
        variance_explained=np.ones(len(uv)),
    )


class TestBarycentricWeights:
    def test_centroid(self):
        triangle = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        weights = barycentric_weights(np.array([1.0 / 3.0, 1.0 / 3.0]), triangle)

        assert np.allclose(weights, [1.0 / 3.0] * 3)


class TestTemplateInterpolator:
    """Tests for TemplateInterpolator."""

    def test_vertices_reproduce_vertex_values(self, affine_template):
        sample = interpolate_template(affine_template, affine_template.param.uv)

        assert sample.valid_count == affine_template.vertex_count
        assert np.allclose(sample.visual, affine_template.visual, atol=1e-12)
        assert np.allclose(sample.prf_size, affine_template.prf_size, atol=1e-12)

    def test_affine_field_is_exact_inside(self, affine_template):
        rng = np.random.default_rng(3)
        radius = 0.95 * np.sqrt(rng.uniform(size=200))
        angle = rng.uniform(0, 2 * np.pi, size=200)
        points = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])

        sample = interpolate_template(affine_template, points)
        expected = points @ np.array([[4.0, 1.0], [-1.0, 3.0]]) + np.array([1.0, 2.0])

        assert np.all(sample.valid)
        assert not np.any(sample.projected)
        assert np.allclose(sample.visual, expected, atol=1e-10)
        assert np.allclose(sample.barycentric.sum(axis=1), 1.0)

    def test_point_near_boundary_is_projected(self, affine_template):
        sample = interpolate_template(affine_template, np.array([[1.01, 0.0]]))

        assert sample.valid.tolist() == [True]
        assert sample.projected.tolist() == [True]
        assert np.allclose(sample.visual[0], [5.0, 3.0])

    def test_point_far_outside_is_invalid(self, affine_template):
        sample = interpolate_template(affine_template, np.array([[2.0, 0.0], [0.0, 0.0]]))

        assert sample.valid.tolist() == [False, True]
        assert sample.face_ids[0] == -1
        assert np.all(np.isnan(sample.visual[0]))
        assert np.isnan(sample.prf_size[0])

    def test_face_jacobians_of_affine_field(self, affine_template):
        jacobians = TemplateInterpolator(affine_template).face_jacobians

        assert jacobians.shape == (affine_template.mesh.face_count, 2, 2)
        assert np.allclose(jacobians, np.array([[4.0, -1.0], [1.0, 3.0]]), atol=1e-10)

    def test_shared_vertex_picks_lowest_face(self, affine_template):
        interpolator = TemplateInterpolator(affine_template)
        face_ids, _, _ = interpolator.locate(np.array([[0.0, 0.0]]))
        touching = np.flatnonzero(np.any(np.asarray(affine_template.faces) == 0, axis=1))

        assert face_ids[0] == touching.min()

    def test_empty_query(self, affine_template):
        sample = interpolate_template(affine_template, np.empty((0, 2)))

        assert sample.valid_count == 0

    def test_high_valence_vertex_picks_lowest_face(self, fan_template):
        face_ids, weights, _ = TemplateInterpolator(fan_template).locate(np.array([[0.0, 0.0]]))

        assert face_ids[0] == 0
        assert np.allclose(weights[0], [1.0, 0.0, 0.0])

    def test_point_on_spoke_picks_lowest_of_both_faces(self, fan_template):
        faces = np.asarray(fan_template.faces)
        spoke = 7
        point = 0.5 * np.array([np.cos(2 * np.pi * (spoke - 1) / SPOKES), np.sin(2 * np.pi * (spoke - 1) / SPOKES)])
        sharing = np.flatnonzero(np.any(faces == spoke, axis=1))

        face_ids, _, _ = TemplateInterpolator(fan_template).locate(point[None, :])

        assert len(sharing) == 2
        assert face_ids[0] == sharing.min()

    def test_many_points_just_outside_the_boundary(self, affine_template):
        uv = np.asarray(affine_template.param.uv)
        boundary = np.asarray(affine_template.param.boundary_ids)
        points = np.repeat(1.01 * uv[boundary], 50, axis=0)

        sample = interpolate_template(affine_template, points)

        assert np.all(sample.valid)
        assert np.all(sample.projected)
        expected = np.repeat(np.asarray(affine_template.visual)[boundary], 50, axis=0)
        assert np.allclose(sample.visual, expected, atol=1e-10)

    def test_projection_band_is_per_instance(self, affine_template):
        points = np.array([[1.01, 0.0]])

        narrow = TemplateInterpolator(affine_template, projection_band=0.001).interpolate(points)
        wide = TemplateInterpolator(affine_template, projection_band=0.05).interpolate(points)

        assert narrow.valid.tolist() == [False]
        assert wide.valid.tolist() == [True]


class TestIncidentFaces:
    def test_rows_list_every_face_around_a_vertex(self, fan_template):
        faces = np.asarray(fan_template.faces)
        table = incident_faces(faces, fan_template.vertex_count)

        assert table.shape == (SPOKES + 1, SPOKES)
        assert set(table[0].tolist()) == set(range(SPOKES))
        for vertex in range(1, SPOKES + 1):
            assert set(table[vertex].tolist()) == set(np.flatnonzero(np.any(faces == vertex, axis=1)).tolist())
