"""Point location and barycentric interpolation of template maps on the disk."""

from typing import Dict, Optional, Tuple

import numpy as np
from matplotlib.tri import Triangulation

from ..lib.config import PROJECTION_BAND
from ..lib.logging import get_logger
from ..models.retinotopic_map import RetinotopicMap, TemplateSample
from .mesh_topology import boundary_loop, directed_edges

logger = get_logger(__name__)

# Barycentric weights down to -CONTAINMENT_TOLERANCE still count as inside
CONTAINMENT_TOLERANCE = 1e-12
# Points with a weight below this are checked against the whole one-ring
EDGE_TOLERANCE = 1e-9


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def barycentric_weights(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """
    Barycentric coordinates of points with respect to triangles.

    Args:
        points: (..., 2) query points
        triangles: (..., 3, 2) triangle corners, broadcast against ``points``

    Returns:
        (..., 3) weights summing to one
    """
    a, b, c = triangles[..., 0, :], triangles[..., 1, :], triangles[..., 2, :]
    v0, v1, v2 = b - a, c - a, points - a
    denom = _cross(v0, v1)
    l1 = _cross(v2, v1) / denom
    l2 = _cross(v0, v2) / denom
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def incident_faces(faces: np.ndarray, vertex_count: int) -> np.ndarray:
    """
    Faces around every vertex as a padded (nv, max valence) array.

    Short rows repeat their first face; a vertex with no face gets -1.
    """
    faces = np.asarray(faces, dtype=np.int64)
    corners = faces.ravel()
    owners = np.repeat(np.arange(len(faces), dtype=np.int64), 3)
    order = np.argsort(corners, kind="stable")
    corners, owners = corners[order], owners[order]
    counts = np.bincount(corners, minlength=vertex_count)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    width = max(int(counts.max()), 1) if len(counts) else 1

    table = np.full((vertex_count, width), -1, dtype=np.int64)
    slot = np.arange(len(corners)) - starts[corners]
    table[corners, slot] = owners
    has_face = counts > 0
    first = np.where(has_face, table[:, 0], -1)
    return np.where(table < 0, first[:, None], table)


class TemplateInterpolator:
    """
    Locates disk points in a template's triangulation and interpolates its values.

    A trapezoid-map search finds a containing face in logarithmic time. Points
    lying on an edge or vertex are re-checked against every face around the
    found face's corners, and the lowest containing face index wins. Points
    outside the triangulation but within ``projection_band`` of the boundary
    are snapped onto the nearest boundary segment.
    """

    def __init__(self, template: RetinotopicMap, projection_band: float = PROJECTION_BAND):
        self.template = template
        self.projection_band = projection_band
        self.uv = np.asarray(template.param.uv)
        self.faces = np.asarray(template.faces, dtype=np.int64)
        self.triangles = self.uv[self.faces]
        self._finder = Triangulation(self.uv[:, 0], self.uv[:, 1], self.faces).get_trifinder()
        self._incident = incident_faces(self.faces, len(self.uv))
        self._face_jacobians: Optional[np.ndarray] = None

        loop = boundary_loop(self.faces)
        owner: Dict[Tuple[int, int], int] = {}
        half_edges = directed_edges(self.faces)
        face_of_half_edge = np.tile(np.arange(len(self.faces)), 3)
        for (i, j), face in zip(half_edges.tolist(), face_of_half_edge.tolist()):
            owner[(i, j)] = face
        nxt = np.roll(loop, -1)
        self._segments = np.column_stack([loop, nxt])
        self._segment_faces = np.array([owner[(int(i), int(j))] for i, j in self._segments], dtype=np.int64)
        self._max_radius = float(np.max(np.linalg.norm(self.uv[loop], axis=1)))

    @property
    def face_jacobians(self) -> np.ndarray:
        """(nf, 2, 2) derivative of template visual coordinates with respect to disk position."""
        if self._face_jacobians is None:
            x, y = self.triangles[..., 0], self.triangles[..., 1]
            area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
            gx = np.stack([y[:, (k + 1) % 3] - y[:, (k + 2) % 3] for k in range(3)], axis=1) / area2[:, None]
            gy = np.stack([x[:, (k + 2) % 3] - x[:, (k + 1) % 3] for k in range(3)], axis=1) / area2[:, None]
            values = np.asarray(self.template.visual)[self.faces]
            jac = np.empty((len(self.faces), 2, 2))
            jac[:, :, 0] = np.einsum("fk,fkc->fc", gx, values)
            jac[:, :, 1] = np.einsum("fk,fkc->fc", gy, values)
            self._face_jacobians = jac
        return self._face_jacobians

    def _pick_containing(self, points: np.ndarray, face_sets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        # face_sets: (m, k) candidate faces per point
        weights = barycentric_weights(points[:, None, :], self.triangles[face_sets])
        inside = np.all(weights >= -CONTAINMENT_TOLERANCE, axis=2)
        ranked = np.where(inside, face_sets, np.iinfo(np.int64).max)
        best = np.argmin(ranked, axis=1)
        rows = np.arange(len(points))
        found = inside[rows, best]
        return np.where(found, face_sets[rows, best], -1), weights[rows, best]

    def locate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Find the containing face and barycentric weights of every point.

        Returns:
            Tuple of (face ids, -1 where outside; (m, 3) weights; (m, 2) points
            after projection onto the boundary)
        """
        points = np.array(points, dtype=float).reshape(-1, 2)
        m = len(points)
        face_ids = np.full(m, -1, dtype=np.int64)
        weights = np.zeros((m, 3))
        if m == 0:
            return face_ids, weights, points

        found = np.asarray(self._finder(points[:, 0], points[:, 1]), dtype=np.int64)
        hit = np.flatnonzero(found >= 0)
        face_ids[hit] = found[hit]
        weights[hit] = barycentric_weights(points[hit], self.triangles[found[hit]])

        # Boundary chords stay inside the circle through the boundary vertices
        outside = np.flatnonzero(
            (face_ids < 0) & (np.linalg.norm(points, axis=1) <= self._max_radius + self.projection_band)
        )
        if outside.size:
            self._project_to_boundary(points, outside, face_ids, weights)

        # Projected points and points on edges or vertices may lie in several faces
        located = np.flatnonzero(face_ids >= 0)
        on_edge = located[np.min(weights[located], axis=1) <= EDGE_TOLERANCE]
        if on_edge.size:
            ring = self._incident[self.faces[face_ids[on_edge]]].reshape(len(on_edge), -1)
            picked, picked_weights = self._pick_containing(points[on_edge], ring)
            keep = picked >= 0
            face_ids[on_edge[keep]] = picked[keep]
            weights[on_edge[keep]] = picked_weights[keep]
        return face_ids, weights, points

    def _project_to_boundary(
        self,
        points: np.ndarray,
        outside: np.ndarray,
        face_ids: np.ndarray,
        weights: np.ndarray,
    ) -> None:
        start = self.uv[self._segments[:, 0]]
        end = self.uv[self._segments[:, 1]]
        direction = end - start
        length_sq = np.einsum("ij,ij->i", direction, direction)

        query = points[outside]
        t = np.einsum("mij,ij->mi", query[:, None, :] - start[None], direction) / length_sq
        t = np.clip(t, 0.0, 1.0)
        foot = start[None] + t[..., None] * direction[None]
        distance = np.linalg.norm(query[:, None, :] - foot, axis=2)
        segment = np.argmin(distance, axis=1)
        rows = np.arange(len(outside))
        within = distance[rows, segment] <= self.projection_band

        for row in np.flatnonzero(within):
            index = outside[row]
            seg = segment[row]
            face = self._segment_faces[seg]
            points[index] = foot[row, seg]
            corner = {int(v): k for k, v in enumerate(self.faces[face])}
            w = np.zeros(3)
            w[corner[int(self._segments[seg, 0])]] = 1.0 - t[row, seg]
            w[corner[int(self._segments[seg, 1])]] = t[row, seg]
            face_ids[index] = face
            weights[index] = w

    def interpolate(self, points: np.ndarray) -> TemplateSample:
        """
        Template visual coordinates and pRF sizes at disk points.

        Args:
            points: (m, 2) query points on the disk

        Returns:
            TemplateSample with validity flags
        """
        original = np.array(points, dtype=float).reshape(-1, 2)
        face_ids, weights, located = self.locate(original)
        valid = face_ids >= 0
        projected = valid & np.any(located != original, axis=1)

        visual = np.full((len(original), 2), np.nan)
        prf_size = np.full(len(original), np.nan)
        if np.any(valid):
            corners = self.faces[face_ids[valid]]
            w = weights[valid]
            visual[valid] = np.einsum("mk,mkc->mc", w, np.asarray(self.template.visual)[corners])
            prf_size[valid] = np.einsum("mk,mk->m", w, np.asarray(self.template.prf_size)[corners])

        invalid = int(np.count_nonzero(~valid))
        if invalid:
            logger.debug("template_points_invalid", count=invalid, total=len(original))
        return TemplateSample(
            visual=visual,
            prf_size=prf_size,
            valid=valid,
            face_ids=face_ids,
            barycentric=weights,
            projected=projected,
        )


def interpolate_template(template: RetinotopicMap, query_points: np.ndarray) -> TemplateSample:
    """
    Interpolate a template's visual coordinates and pRF sizes at disk points.

    Points inside the template triangulation get barycentric values of their
    containing face; outside points within ``PROJECTION_BAND`` of the boundary
    are snapped onto it; the rest are flagged invalid.
    """
    return TemplateInterpolator(template).interpolate(query_points)
