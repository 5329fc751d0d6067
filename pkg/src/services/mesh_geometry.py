"""Per-face geometry: cotangent weights, Laplacians and isometric local frames."""

from typing import Tuple

import numpy as np
from scipy import sparse


def face_cotangents(points: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """
    Cotangent of every face corner angle.

    Works for 2D and 3D points. Column k holds the cotangent of the angle at
    corner k, which sits opposite the edge (k+1, k+2).

    Returns:
        (nf, 3) cotangents
    """
    points = np.asarray(points, dtype=float)
    faces = np.asarray(faces)
    cots = np.empty((len(faces), 3))
    for k in range(3):
        apex = points[faces[:, k]]
        a = points[faces[:, (k + 1) % 3]] - apex
        b = points[faces[:, (k + 2) % 3]] - apex
        dot = np.einsum("ij,ij->i", a, b)
        if points.shape[1] == 2:
            cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        else:
            cross = np.linalg.norm(np.cross(a, b), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cots[:, k] = dot / cross
    cots[~np.isfinite(cots)] = 0.0
    return cots


def cotangent_edge_weights(points: np.ndarray, faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Symmetric edge weights w_ij = (cot alpha + cot beta) / 2.

    Returns:
        Tuple of ((ne, 2) sorted vertex pairs, (ne,) weights)
    """
    faces = np.asarray(faces)
    cots = face_cotangents(points, faces)
    rows = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
    cols = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
    values = 0.5 * np.concatenate([cots[:, 0], cots[:, 1], cots[:, 2]])
    pairs = np.sort(np.column_stack([rows, cols]), axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    weights = np.bincount(inverse.ravel(), weights=values, minlength=len(edges))
    return edges, weights


def uniform_edge_weights(faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit weight on every undirected edge."""
    faces = np.asarray(faces)
    pairs = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    edges = np.unique(pairs, axis=0)
    return edges, np.ones(len(edges))


def weighted_laplacian(n_vertices: int, edges: np.ndarray, weights: np.ndarray) -> sparse.csr_matrix:
    """
    Graph Laplacian L = D - W, so that x^T L x = sum_edges w_ij (x_i - x_j)^2.

    Args:
        n_vertices: Number of vertices
        edges: (ne, 2) vertex pairs
        weights: (ne,) edge weights

    Returns:
        Sparse (n, n) Laplacian
    """
    i, j = edges[:, 0], edges[:, 1]
    off = sparse.coo_matrix(
        (np.concatenate([-weights, -weights]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n_vertices, n_vertices),
    ).tocsr()
    degree = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sparse.diags(degree)).tocsr()


def local_face_frames(vertices3d: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """
    Isometric 2D coordinates of every face in its own tangent frame.

    Corner 0 sits at the origin, corner 1 on the positive x-axis and corner 2
    in the upper half-plane, so every local triangle is counter-clockwise.

    Returns:
        (nf, 3, 2) local corner coordinates
    """
    vertices3d = np.asarray(vertices3d, dtype=float)
    faces = np.asarray(faces)
    p0 = vertices3d[faces[:, 0]]
    e1 = vertices3d[faces[:, 1]] - p0
    e2 = vertices3d[faces[:, 2]] - p0
    len1 = np.linalg.norm(e1, axis=1)
    x_axis = e1 / len1[:, None]
    normal = np.cross(e1, e2)
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    y_axis = np.cross(normal, x_axis)

    local = np.zeros((len(faces), 3, 2))
    local[:, 1, 0] = len1
    local[:, 2, 0] = np.einsum("ij,ij->i", e2, x_axis)
    local[:, 2, 1] = np.einsum("ij,ij->i", e2, y_axis)
    return local
