"""Beltrami coefficients of piecewise-linear planar maps: compute, clamp and invert."""

from typing import Mapping, Tuple, Union

import numpy as np
from scipy import sparse

from ..lib.config import CONFORMAL_SINGULARITY_EPS, DEFAULT_EPSILON, DEGENERATE_AREA_2D
from ..lib.errors import (
    ConformalSingularity,
    ConstraintInsufficient,
    DegenerateSourceFace,
    MuOutOfRange,
)
from ..lib.logging import get_logger
from ..models.beltrami_field import BeltramiField
from .sparse_solver import solve_symmetric

logger = get_logger(__name__)

BoundaryConstraints = Union[Mapping[int, Tuple[float, float]], Tuple[np.ndarray, np.ndarray]]


def face_triangles(points2d: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """(nf, 3, 2) corner coordinates of every face."""
    return np.asarray(points2d, dtype=float)[np.asarray(faces)]


def _as_complex(triangles: np.ndarray) -> np.ndarray:
    return triangles[..., 0] + 1j * triangles[..., 1]


def affine_coefficients(source_tri: np.ndarray, target_tri: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-face coefficients of the affine map f(z) = a z + b conj(z) + c.

    Args:
        source_tri: (nf, 3, 2) source corners
        target_tri: (nf, 3, 2) target corners

    Returns:
        Tuple of complex arrays (a, b), i.e. (f_z, f_zbar) per face

    Raises:
        DegenerateSourceFace: If a source face has (near) zero area
    """
    zs = _as_complex(source_tri)
    ws = _as_complex(target_tri)
    dz1, dz2 = zs[:, 1] - zs[:, 0], zs[:, 2] - zs[:, 0]
    dw1, dw2 = ws[:, 1] - ws[:, 0], ws[:, 2] - ws[:, 0]

    area = 0.5 * (dz1.real * dz2.imag - dz1.imag * dz2.real)
    degenerate = np.abs(area) < DEGENERATE_AREA_2D
    if np.any(degenerate):
        face = int(np.argmax(degenerate))
        raise DegenerateSourceFace(f"source face {face} is degenerate (area {area[face]:.3e})", face=face)

    det = dz1 * np.conj(dz2) - dz2 * np.conj(dz1)
    a = (dw1 * np.conj(dz2) - dw2 * np.conj(dz1)) / det
    b = (dz1 * dw2 - dz2 * dw1) / det
    return a, b


def beltrami_from_triangles(source_tri: np.ndarray, target_tri: np.ndarray) -> BeltramiField:
    """
    Beltrami coefficient per face from explicit per-face corner coordinates.

    Faces may live in independent frames (e.g. the isometric local frames of
    a 3D mesh); mu only depends on each face's own linear map.

    Raises:
        DegenerateSourceFace: If a source face is degenerate
        ConformalSingularity: If |f_z| < 1e-14 on some face
    """
    a, b = affine_coefficients(source_tri, target_tri)
    singular = np.abs(a) < CONFORMAL_SINGULARITY_EPS
    if np.any(singular):
        face = int(np.argmax(singular))
        raise ConformalSingularity(f"|f_z| vanishes on face {face}; mu is undefined", face=face)
    return BeltramiField(mu=b / a)


def compute_beltrami(faces: np.ndarray, source2d: np.ndarray, target2d: np.ndarray) -> BeltramiField:
    """
    Beltrami coefficient mu = f_zbar / f_z of the piecewise-linear map source -> target.

    Args:
        faces: (nf, 3) vertex indices
        source2d: (nv, 2) source embedding
        target2d: (nv, 2) target embedding

    Returns:
        BeltramiField with one coefficient per face
    """
    return beltrami_from_triangles(face_triangles(source2d, faces), face_triangles(target2d, faces))


def clamp_beltrami(field: BeltramiField, epsilon: float = DEFAULT_EPSILON) -> BeltramiField:
    """
    Project coefficients into the disk of radius 1 - epsilon, keeping their argument.

    Args:
        field: Beltrami field
        epsilon: Margin, 0 < epsilon < 1

    Returns:
        Clamped field; entries already inside the disk are untouched
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    bound = 1.0 - epsilon
    mu = np.array(field.mu)
    magnitude = np.abs(mu)
    outside = magnitude > bound
    if np.any(outside):
        mu[outside] = mu[outside] * (bound / magnitude[outside])
        logger.debug("beltrami_clamped", faces=int(np.count_nonzero(outside)), bound=bound)
    return BeltramiField(mu=mu)


def metric_coefficients(mu: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-face (alpha, beta, gamma) of the generalised Laplace operator.

    The symmetric matrix [[alpha, beta], [beta, gamma]] has unit determinant
    and is positive definite whenever |mu| < 1.
    """
    rho, tau = mu.real, mu.imag
    denom = 1.0 - (rho ** 2 + tau ** 2)
    alpha = ((1.0 - rho) ** 2 + tau ** 2) / denom
    beta = -2.0 * tau / denom
    gamma = ((1.0 + rho) ** 2 + tau ** 2) / denom
    return alpha, beta, gamma


def beltrami_stiffness(faces: np.ndarray, source_tri: np.ndarray, mu: np.ndarray, n_vertices: int) -> sparse.csr_matrix:
    """
    Assemble the (n, n) stiffness matrix of div(A grad u) with A built from mu.

    Args:
        faces: (nf, 3) vertex indices
        source_tri: (nf, 3, 2) source corners (counter-clockwise)
        mu: (nf,) complex coefficients, |mu| < 1
        n_vertices: Number of vertices

    Returns:
        Symmetric sparse stiffness matrix
    """
    faces = np.asarray(faces)
    x, y = source_tri[..., 0], source_tri[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    # Hat-function gradients, corner k: (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1}) / 2A
    gx = np.stack([y[:, (k + 1) % 3] - y[:, (k + 2) % 3] for k in range(3)], axis=1) / (2.0 * area[:, None])
    gy = np.stack([x[:, (k + 2) % 3] - x[:, (k + 1) % 3] for k in range(3)], axis=1) / (2.0 * area[:, None])

    alpha, beta, gamma = metric_coefficients(mu)
    area_abs = np.abs(area)
    rows, cols, values = [], [], []
    for k in range(3):
        for m in range(3):
            entry = area_abs * (
                alpha * gx[:, k] * gx[:, m]
                + beta * (gx[:, k] * gy[:, m] + gy[:, k] * gx[:, m])
                + gamma * gy[:, k] * gy[:, m]
            )
            rows.append(faces[:, k])
            cols.append(faces[:, m])
            values.append(entry)
    return sparse.coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_vertices, n_vertices),
    ).tocsr()


def _constraint_arrays(boundary_constraints: BoundaryConstraints) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(boundary_constraints, Mapping):
        ids = np.fromiter(boundary_constraints.keys(), dtype=np.int64, count=len(boundary_constraints))
        points = np.array([boundary_constraints[int(i)] for i in ids], dtype=float).reshape(-1, 2)
        return ids, points
    ids, points = boundary_constraints
    return np.asarray(ids, dtype=np.int64), np.asarray(points, dtype=float).reshape(-1, 2)


def solve_with_pins(
    stiffness: sparse.spmatrix,
    pinned_ids: np.ndarray,
    pinned_points: np.ndarray,
    stage: str = "beltrami",
) -> np.ndarray:
    """
    Solve the stacked (u, v) system with Dirichlet values eliminated by substitution.

    Args:
        stiffness: (n, n) symmetric stiffness shared by both coordinates
        pinned_ids: (k,) constrained vertices
        pinned_points: (k, 2) their prescribed positions

    Returns:
        (n, 2) solution with pinned rows equal to the constraints
    """
    n = stiffness.shape[0]
    stacked = sparse.block_diag((stiffness, stiffness), format="csr")
    pinned = np.concatenate([pinned_ids, pinned_ids + n])
    free = np.setdiff1d(np.arange(2 * n), pinned)

    values = np.zeros(2 * n)
    values[pinned_ids] = pinned_points[:, 0]
    values[pinned_ids + n] = pinned_points[:, 1]

    rhs = -(stacked[free][:, pinned] @ values[pinned])
    values[free] = solve_symmetric(stacked[free][:, free], rhs, stage=stage)
    return np.column_stack([values[:n], values[n:]])


def linear_beltrami_solve(
    faces: np.ndarray,
    source2d: np.ndarray,
    field: BeltramiField,
    boundary_constraints: BoundaryConstraints,
) -> np.ndarray:
    """
    Reconstruct the piecewise-linear map whose Beltrami coefficient best matches ``field``.

    Args:
        faces: (nf, 3) vertex indices
        source2d: (nv, 2) source embedding (no degenerate faces)
        field: Prescribed coefficients, max |mu| < 1
        boundary_constraints: vertex -> (x, y) mapping, or (ids, points) arrays;
            must pin every boundary vertex and may pin interior landmarks

    Returns:
        (nv, 2) target positions

    Raises:
        ConstraintInsufficient: If fewer than 2 vertices are pinned
        MuOutOfRange: If some |mu| >= 1
        DegenerateSourceFace: If a source face is degenerate
        SolverFailure: If the linear system does not converge
    """
    source2d = np.asarray(source2d, dtype=float)
    pinned_ids, pinned_points = _constraint_arrays(boundary_constraints)
    if len(np.unique(pinned_ids)) < 2:
        raise ConstraintInsufficient(f"{len(np.unique(pinned_ids))} pinned vertices; at least 2 required")
    if len(field.mu) != len(faces):
        raise ValueError("Beltrami field must have one coefficient per face")
    if field.max_abs >= 1.0:
        raise MuOutOfRange(f"max |mu| = {field.max_abs:.6f} is not below 1")

    source_tri = face_triangles(source2d, faces)
    area = 0.5 * np.abs(
        (source_tri[:, 1, 0] - source_tri[:, 0, 0]) * (source_tri[:, 2, 1] - source_tri[:, 0, 1])
        - (source_tri[:, 2, 0] - source_tri[:, 0, 0]) * (source_tri[:, 1, 1] - source_tri[:, 0, 1])
    )
    if np.any(area < DEGENERATE_AREA_2D):
        face = int(np.argmin(area))
        raise DegenerateSourceFace(f"source face {face} is degenerate", face=face)

    stiffness = beltrami_stiffness(faces, source_tri, field.mu, len(source2d))
    target = solve_with_pins(stiffness, pinned_ids, pinned_points)
    logger.debug("linear_beltrami_solved", vertices=len(source2d), pinned=len(pinned_ids), mu_max=field.max_abs)
    return target
