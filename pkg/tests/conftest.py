"""Shared fixtures: small disk meshes, template maps and a compact synthetic experiment."""

import numpy as np
import pytest

from src.models.cortical_mesh import CorticalMesh
from src.models.retinotopic_map import Hemisphere, RetinotopicMap
from src.models.synthetic_spec import SyntheticSpec
from src.services.case_directory import write_synthetic_case
from src.services.synthetic_data import build_synthetic_case, disk_mesh, disk_parameterization


@pytest.fixture
def hex_disk():
    """Planar hexagonal disk of radius 1 with 3 rings (37 vertices, 54 faces)."""
    return disk_mesh(37, radius=1.0)


@pytest.fixture
def hex_param(hex_disk):
    return disk_parameterization(hex_disk, 1.0)


@pytest.fixture
def tetrahedron():
    """Closed surface; a valid mesh that is not a disk."""
    vertices = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return CorticalMesh(vertices=vertices, faces=faces)


@pytest.fixture
def affine_template(hex_disk, hex_param):
    """Template whose visual coordinates are an affine function of disk position."""
    uv = np.asarray(hex_param.uv)
    visual = uv @ np.array([[4.0, 1.0], [-1.0, 3.0]]) + np.array([1.0, 2.0])
    return RetinotopicMap(
        mesh=hex_disk,
        param=hex_param,
        visual=visual,
        prf_size=1.0 + 0.5 * uv[:, 0] ** 2,
        variance_explained=np.ones(hex_disk.vertex_count),
        hemisphere=Hemisphere.LEFT,
    )


@pytest.fixture(scope="session")
def small_spec():
    """Synthetic experiment small enough for unit tests."""
    return SyntheticSpec(
        mesh_resolution=127,
        deformation_mu_max=0.3,
        visual_noise_sd=0.0,
        n_sweeps=4,
        frames_per_sweep=6,
        stimulus_resolution=21,
        seed=7,
    )


@pytest.fixture(scope="session")
def synthetic_case(small_spec):
    return build_synthetic_case(small_spec)


@pytest.fixture
def case_dirs(tmp_path, synthetic_case):
    """Subject and template case directories written from the synthetic experiment."""
    return write_synthetic_case(synthetic_case, tmp_path / "subject", tmp_path / "template")
