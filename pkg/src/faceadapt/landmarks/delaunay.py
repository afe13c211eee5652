"""Incremental (Bowyer-Watson) Delaunay triangulation.

Points are inserted in index order into a super-triangle; each insertion
carves out the cavity of triangles whose circumcircle strictly contains the
point and re-triangulates its boundary. Cocircular ties are resolved by a
final legalization pass that, for every cocircular quad, keeps the diagonal
with the lexicographically smallest index pair, so the output is
deterministic across platforms.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ..validation import DegenerateGeometryError

INCIRCLE_EPS = 1e-12

__all__ = ["Triangulation", "delaunay_triangulate", "circumcircle_contains", "save_topology", "load_topology"]


@dataclass(frozen=True)
class Triangulation:
    """Triangles as sorted (i, j, k) index triplets, listed lexicographically."""

    triangles: tuple[tuple[int, int, int], ...]
    hull_size: int

    def __len__(self) -> int:
        return len(self.triangles)


def _incircle_det(pts: np.ndarray, tri: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Signed in-circle determinant of point d against triangles (rows of tri).

    Positive when d is strictly inside the circumcircle, after normalizing
    each triangle to counterclockwise orientation.
    """
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    orient = np.sign((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    ax, ay = a[:, 0] - d[0], a[:, 1] - d[1]
    bx, by = b[:, 0] - d[0], b[:, 1] - d[1]
    cx, cy = c[:, 0] - d[0], c[:, 1] - d[1]
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    det = ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
    return det * orient


def circumcircle_contains(pts: np.ndarray, triangle, point, eps: float = INCIRCLE_EPS) -> bool:
    """True if ``point`` lies strictly inside the circumcircle of ``triangle``."""
    tri = np.asarray([triangle], dtype=np.int64)
    return bool(_incircle_det(pts, tri, np.asarray(point, dtype=np.float64))[0] > eps)


def _boundary_edges(cavity: np.ndarray) -> list[tuple[int, int]]:
    """Edges belonging to exactly one cavity triangle, i.e. the cavity rim."""
    counts: dict[tuple[int, int], int] = {}
    for i, j, k in cavity:
        for u, v in ((i, j), (j, k), (k, i)):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    return [e for e, c in counts.items() if c == 1]


def _legalize_ties(pts: np.ndarray, triangles: set[tuple[int, int, int]], eps: float) -> set[tuple[int, int, int]]:
    """Resolve cocircular quads toward the lexicographically smallest diagonal."""
    for _ in range(len(triangles) + 8):
        edge_map: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
        for tri in triangles:
            i, j, k = tri
            for u, v in ((i, j), (j, k), (i, k)):
                edge_map.setdefault((u, v), []).append(tri)
        flipped = False
        for (u, v), owners in edge_map.items():
            if len(owners) != 2:
                continue
            a = next(x for x in owners[0] if x not in (u, v))
            b = next(x for x in owners[1] if x not in (u, v))
            alt = tuple(sorted((a, b)))
            if alt >= (u, v):
                continue
            det = _incircle_det(pts, np.asarray([owners[0]]), pts[b])[0]
            if abs(det) > eps:
                continue  # not a tie; the Delaunay diagonal stays
            # Flipping is only valid when the quad u-a-v-b is strictly convex.
            quad = pts[[u, a, v, b]]
            edges = np.roll(quad, -1, axis=0) - quad
            nxt = np.roll(edges, -1, axis=0)
            cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
            if not (np.all(cross > 0) or np.all(cross < 0)):
                continue
            triangles.discard(owners[0])
            triangles.discard(owners[1])
            triangles.add(tuple(sorted((a, b, u))))
            triangles.add(tuple(sorted((a, b, v))))
            flipped = True
            break
        if not flipped:
            return triangles
    return triangles


def delaunay_triangulate(points) -> Triangulation:
    """Delaunay triangulation of 2-D points; raises on all-collinear input."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
    n = pts.shape[0]
    if n < 3:
        raise DegenerateGeometryError("need at least 3 points to triangulate")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite coordinates")

    center = (pts.min(axis=0) + pts.max(axis=0)) / 2.0
    radius = float(np.max(np.linalg.norm(pts - center, axis=1)))
    r = 64.0 * max(radius, 1.0)
    angles = np.array([np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 + 4 * np.pi / 3])
    super_pts = center + 2.0 * r * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    all_pts = np.vstack([pts, super_pts])

    tri_arr = np.array([[n, n + 1, n + 2]], dtype=np.int64)
    for idx in range(n):
        det = _incircle_det(all_pts, tri_arr, pts[idx])
        bad = det > INCIRCLE_EPS
        if not np.any(bad):
            continue  # duplicate or on-circle point; leave the mesh untouched
        cavity = tri_arr[bad]
        tri_arr = tri_arr[~bad]
        new = np.array(
            [sorted((u, v, idx)) for u, v in _boundary_edges(cavity)],
            dtype=np.int64,
        )
        tri_arr = np.vstack([tri_arr, new])

    keep = np.all(tri_arr < n, axis=1)
    triangles = {tuple(int(v) for v in row) for row in tri_arr[keep]}
    if not triangles:
        raise DegenerateGeometryError("points are collinear; no triangulation exists")
    triangles = _legalize_ties(all_pts, triangles, INCIRCLE_EPS)

    hull_edges = _boundary_edges(np.asarray(sorted(triangles), dtype=np.int64))
    return Triangulation(triangles=tuple(sorted(triangles)), hull_size=len(hull_edges))


def save_topology(path: str | os.PathLike, topology: Triangulation) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"triangles": [list(t) for t in topology.triangles], "hull_size": topology.hull_size}, fh)


def load_topology(path: str | os.PathLike) -> Triangulation:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return Triangulation(
        triangles=tuple(tuple(int(v) for v in t) for t in obj["triangles"]),
        hull_size=int(obj["hull_size"]),
    )
