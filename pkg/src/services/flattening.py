"""Flatten disk-topology cortical patches onto the unit disk."""

from typing import List, Tuple

import numpy as np
from scipy import sparse

from ..lib.config import DEFAULT_FLATTEN_WEIGHTING, DEFAULT_REFINE_ITERATIONS
from ..lib.errors import DrrmError, NotADisk, SolverFailure
from ..lib.logging import get_logger
from ..models.beltrami_field import BeltramiField, ConformalErrorSummary
from ..models.cortical_mesh import CorticalMesh
from ..models.disk_parameterization import DiskParameterization
from .beltrami import (
    beltrami_from_triangles,
    beltrami_stiffness,
    clamp_beltrami,
    face_triangles,
    solve_with_pins,
)
from .mesh_geometry import cotangent_edge_weights, local_face_frames, uniform_edge_weights, weighted_laplacian
from .mesh_topology import boundary_loop, count_flipped, validate_topology
from .sparse_solver import solve_symmetric

logger = get_logger(__name__)

WEIGHTING_MODES = ("cotangent", "uniform")

# Margin used when a refine pass has to clamp the inverse-map coefficient
REFINE_CLAMP_EPSILON = 1e-3


def _edge_weights(mesh: CorticalMesh, weighting: str) -> Tuple[np.ndarray, np.ndarray]:
    if weighting == "uniform":
        return uniform_edge_weights(mesh.faces)
    if weighting != "cotangent":
        raise ValueError(f"weighting must be one of {WEIGHTING_MODES}, got '{weighting}'")
    edges, weights = cotangent_edge_weights(mesh.vertices, mesh.faces)
    negative = int(np.count_nonzero(weights < 0))
    if negative:
        logger.debug("negative_cotangent_weights_clamped", edges=negative)
    return edges, np.maximum(weights, 0.0)


def boundary_circle_positions(vertices3d: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """
    Place a boundary loop on the unit circle by cumulative 3D arc length.

    The first loop vertex lands at angle 0 and the loop runs counter-clockwise.
    """
    points = np.asarray(vertices3d, dtype=float)[loop]
    segments = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(segments)[:-1]])
    angles = 2.0 * np.pi * cumulative / segments.sum()
    return np.column_stack([np.cos(angles), np.sin(angles)])


def harmonic_disk_map(mesh: CorticalMesh, weighting: str = DEFAULT_FLATTEN_WEIGHTING) -> DiskParameterization:
    """
    Map a disk-topology patch onto the unit disk with a harmonic map.

    The boundary loop goes to the unit circle by 3D arc length; interior
    vertices solve the discrete Laplace equation. Cotangent weights are
    clamped at zero so every interior vertex is a convex combination of its
    neighbours.

    Args:
        mesh: Cortical patch
        weighting: "cotangent" (default) or "uniform"

    Returns:
        Flip-free DiskParameterization

    Raises:
        NotADisk: If the mesh is not a topological disk
        SolverFailure: If the Laplace system does not converge or the map flips faces
    """
    report = validate_topology(mesh)
    if not report.is_disk:
        raise NotADisk(
            f"mesh is not a disk (euler={report.euler_characteristic}, "
            f"boundary_loops={report.boundary_loop_count})"
        )
    loop = boundary_loop(mesh.faces)
    n = mesh.vertex_count

    edges, weights = _edge_weights(mesh, weighting)
    laplacian = weighted_laplacian(n, edges, weights).tocsr()

    uv = np.zeros((n, 2))
    uv[loop] = boundary_circle_positions(mesh.vertices, loop)
    interior = np.setdiff1d(np.arange(n), loop)
    if interior.size:
        rhs = -(laplacian[interior][:, loop] @ uv[loop])
        uv[interior] = solve_symmetric(laplacian[interior][:, interior], rhs, stage="flatten")

    flipped = count_flipped(uv, mesh.faces)
    if flipped:
        raise SolverFailure(f"harmonic map flipped {flipped} faces", stage="flatten", f_flip=flipped)

    logger.info(
        "harmonic_disk_map_computed",
        vertices=n,
        boundary_vertices=len(loop),
        weighting=weighting,
    )
    return DiskParameterization(uv=uv, boundary_ids=loop)


def surface_beltrami(mesh: CorticalMesh, uv: np.ndarray) -> BeltramiField:
    """Beltrami coefficient of the surface-to-disk map, measured in per-face isometric frames."""
    return beltrami_from_triangles(local_face_frames(mesh.vertices, mesh.faces), face_triangles(uv, mesh.faces))


def conformal_error(mesh: CorticalMesh, param: DiskParameterization) -> ConformalErrorSummary:
    """
    |mu| statistics of the 3D-to-disk map.

    Args:
        mesh: Cortical patch
        param: Its disk parameterization

    Returns:
        ConformalErrorSummary with per-face, mean and max |mu|
    """
    return ConformalErrorSummary.from_field(surface_beltrami(mesh, param.uv))


def _refine_pass(mesh: CorticalMesh, uv: np.ndarray, boundary: np.ndarray) -> np.ndarray:
    # Coefficient of the inverse map (disk -> surface); composing the current
    # map with a disk map carrying that coefficient cancels the distortion.
    source_tri = face_triangles(uv, mesh.faces)
    inverse = beltrami_from_triangles(source_tri, local_face_frames(mesh.vertices, mesh.faces))
    if inverse.max_abs >= 1.0 - REFINE_CLAMP_EPSILON:
        inverse = clamp_beltrami(inverse, REFINE_CLAMP_EPSILON)
    stiffness = beltrami_stiffness(mesh.faces, source_tri, inverse.mu, len(uv))
    return solve_with_pins(stiffness, boundary, uv[boundary], stage="flatten")


def refine_with_trace(
    mesh: CorticalMesh,
    param: DiskParameterization,
    iterations: int = DEFAULT_REFINE_ITERATIONS,
) -> Tuple[DiskParameterization, List[float]]:
    """
    Reduce the conformal distortion of a parameterization, keeping the boundary fixed.

    A pass is accepted only if the result stays flip-free and mean |mu| does
    not increase; the first rejected pass ends the loop.

    Args:
        mesh: Cortical patch
        param: Flip-free starting parameterization
        iterations: Maximum number of passes

    Returns:
        Tuple of (refined parameterization, mean |mu| after each accepted pass,
        starting with the input's)

    Raises:
        SolverFailure: If a linear solve does not converge
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if iterations == 0:
        return param, [conformal_error(mesh, param).mean_abs]

    uv = np.array(param.uv)
    boundary = np.asarray(param.boundary_ids)
    current = conformal_error(mesh, param).mean_abs
    trace = [current]

    for iteration in range(1, iterations + 1):
        candidate = _refine_pass(mesh, uv, boundary)
        if count_flipped(candidate, mesh.faces):
            logger.debug("refine_pass_rejected", iteration=iteration, reason="flipped")
            break
        try:
            candidate_error = surface_beltrami(mesh, candidate).mean_abs
        except DrrmError as e:
            logger.debug("refine_pass_rejected", iteration=iteration, reason=e.code)
            break
        if candidate_error > current:
            logger.debug("refine_pass_rejected", iteration=iteration, reason="distortion_increased")
            break
        uv, current = candidate, candidate_error
        trace.append(current)
        logger.debug("refine_pass_accepted", iteration=iteration, mean_mu=current)

    logger.info("conformal_refine_finished", passes=len(trace) - 1, mean_mu=current)
    return DiskParameterization(uv=uv, boundary_ids=boundary), trace


def conformal_refine(
    mesh: CorticalMesh,
    param: DiskParameterization,
    iterations: int = DEFAULT_REFINE_ITERATIONS,
) -> DiskParameterization:
    """Refined parameterization; see ``refine_with_trace``."""
    refined, _ = refine_with_trace(mesh, param, iterations)
    return refined


def flatten_mesh(
    mesh: CorticalMesh,
    refine_iterations: int = DEFAULT_REFINE_ITERATIONS,
    weighting: str = DEFAULT_FLATTEN_WEIGHTING,
) -> DiskParameterization:
    """Harmonic disk map followed by ``refine_iterations`` refine passes."""
    param = harmonic_disk_map(mesh, weighting=weighting)
    if refine_iterations:
        param = conformal_refine(mesh, param, refine_iterations)
    return param


def uniform_mean_value_residual(mesh: CorticalMesh, param: DiskParameterization) -> float:
    """Largest deviation of an interior vertex from the average of its neighbours."""
    edges, weights = uniform_edge_weights(mesh.faces)
    adjacency = weighted_laplacian(mesh.vertex_count, edges, weights)
    degree = adjacency.diagonal()
    interior = param.interior_mask
    residual = (sparse.diags(1.0 / degree) @ adjacency) @ param.uv
    return float(np.max(np.abs(residual[interior]))) if np.any(interior) else 0.0
