"""Mesh topology validation, orientation signs and flip counting."""

from typing import List, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from ..lib.errors import (
    InconsistentOrientation,
    InvalidMesh,
    MultipleComponents,
    NonManifoldEdge,
    NotADisk,
)
from ..lib.logging import get_logger
from ..models.cortical_mesh import CorticalMesh, TopologyReport

logger = get_logger(__name__)


def directed_edges(faces: np.ndarray) -> np.ndarray:
    """(3 nf, 2) directed half-edges (i -> j) in face order."""
    faces = np.asarray(faces)
    return np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])


def unique_edges(faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Undirected edges with their face counts.

    Returns:
        Tuple of ((ne, 2) sorted vertex pairs, (ne,) number of incident faces)
    """
    half_edges = np.sort(directed_edges(faces), axis=1)
    edges, counts = np.unique(half_edges, axis=0, return_counts=True)
    return edges, counts


def boundary_half_edges(faces: np.ndarray) -> np.ndarray:
    """Directed half-edges whose twin is missing (boundary edges, face orientation)."""
    half_edges = directed_edges(faces)
    edges, counts = unique_edges(faces)
    boundary = edges[counts == 1]
    if boundary.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    keys = set(map(tuple, boundary.tolist()))
    sorted_half = np.sort(half_edges, axis=1)
    mask = np.array([tuple(e) in keys for e in sorted_half.tolist()], dtype=bool)
    return half_edges[mask]


def _count_components(n_vertices: int, edges: np.ndarray) -> int:
    if edges.size == 0:
        return n_vertices
    adjacency = sparse.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])),
        shape=(n_vertices, n_vertices),
    )
    count, _ = connected_components(adjacency, directed=False)
    return int(count)


def validate_topology(mesh: CorticalMesh) -> TopologyReport:
    """
    Compute the topology report of a mesh.

    Args:
        mesh: Cortical mesh (index bounds already checked at construction)

    Returns:
        TopologyReport with Euler characteristic and boundary loop count

    Raises:
        NonManifoldEdge: If an edge is shared by more than two faces
        MultipleComponents: If the mesh is not a single connected component
    """
    faces = mesh.faces
    edges, counts = unique_edges(faces)
    if np.any(counts > 2):
        bad = edges[np.argmax(counts > 2)]
        raise NonManifoldEdge(
            f"edge ({int(bad[0])}, {int(bad[1])}) is shared by {int(counts.max())} faces",
            edge=[int(bad[0]), int(bad[1])],
        )

    components = _count_components(mesh.vertex_count, edges)
    if components != 1:
        raise MultipleComponents(f"mesh has {components} connected components", components=components)

    boundary = edges[counts == 1]
    if boundary.size:
        boundary_vertices = np.unique(boundary)
        remap = -np.ones(mesh.vertex_count, dtype=np.int64)
        remap[boundary_vertices] = np.arange(len(boundary_vertices))
        loop_count = _count_components(len(boundary_vertices), remap[boundary])
    else:
        loop_count = 0

    euler = mesh.vertex_count - len(edges) + mesh.face_count
    report = TopologyReport(
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
        edge_count=len(edges),
        boundary_loop_count=loop_count,
        euler_characteristic=euler,
        is_disk=(euler == 1 and loop_count == 1),
    )
    logger.debug(
        "topology_validated",
        vertices=report.vertex_count,
        faces=report.face_count,
        euler=euler,
        boundary_loops=loop_count,
    )
    return report


def check_consistent_orientation(faces: np.ndarray) -> None:
    """
    Check that neighbouring faces traverse their shared edge in opposite directions.

    Raises:
        InconsistentOrientation: If some interior edge is traversed twice the same way
    """
    half_edges = directed_edges(faces)
    _, counts = np.unique(half_edges, axis=0, return_counts=True)
    if np.any(counts > 1):
        raise InconsistentOrientation("face orientations are inconsistent (a half-edge repeats)")


def boundary_loop(faces: np.ndarray) -> np.ndarray:
    """
    Ordered boundary loop of a disk-topology mesh.

    The loop follows the face orientation, so for counter-clockwise faces it
    runs counter-clockwise with the interior on its left.

    Raises:
        NotADisk: If the boundary is empty or not a single simple loop
    """
    half_edges = boundary_half_edges(faces)
    if len(half_edges) < 3:
        raise NotADisk("mesh has no boundary loop")
    successor = {}
    for i, j in half_edges.tolist():
        if i in successor:
            raise NotADisk(f"boundary vertex {i} is pinched (non-simple boundary)")
        successor[i] = j

    start = int(half_edges[:, 0].min())
    loop: List[int] = [start]
    current = successor[start]
    while current != start:
        loop.append(current)
        if len(loop) > len(half_edges) or current not in successor:
            raise NotADisk("boundary edges do not form a single loop")
        current = successor[current]
    if len(loop) != len(half_edges):
        raise NotADisk("mesh has more than one boundary loop")
    return np.asarray(loop, dtype=np.int64)


def signed_areas(points2d: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Signed area of every face of a planar embedding (positive = counter-clockwise)."""
    points2d = np.asarray(points2d, dtype=float)
    faces = np.asarray(faces)
    p0 = points2d[faces[:, 0]]
    e1 = points2d[faces[:, 1]] - p0
    e2 = points2d[faces[:, 2]] - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def triangle_orientation_signs(points2d: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """
    Orientation sign of every face of a planar embedding.

    Args:
        points2d: (nv, 2) coordinates
        faces: (nf, 3) vertex indices

    Returns:
        (nf,) int array of -1, 0 or +1; 0 only for exactly degenerate faces
    """
    return np.sign(signed_areas(points2d, faces)).astype(np.int64)


def count_flipped(points2d: np.ndarray, faces: np.ndarray) -> int:
    """Number of faces whose orientation sign is not +1 (F_flip)."""
    return int(np.count_nonzero(triangle_orientation_signs(points2d, faces) != 1))


def assert_flip_free(points2d: np.ndarray, faces: np.ndarray, what: str = "embedding") -> None:
    """
    Raise if a planar embedding has flipped or degenerate faces.

    Raises:
        InvalidMesh: If F_flip > 0
    """
    flipped = count_flipped(points2d, faces)
    if flipped:
        raise InvalidMesh(f"{what} has {flipped} flipped or degenerate faces", f_flip=flipped)
