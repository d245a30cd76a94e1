"""Voronoi coverage geometry over a convex mission space.

Cells are built by clipping the mission polygon against perpendicular
bisector half-planes, which is exact for convex spaces. Centroids are the
MPC reference set points; the locational cost is evaluation-only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePolygon, ZeroArea

CONVEXITY_TOL = 1e-9
AREA_REL_TOL = 1e-9
TIE_EPS = 1e-9

UNIFORM = "uniform"


def cross2(a, b) -> float:
    """Scalar cross product of planar vectors."""
    return float(a[0] * b[1] - a[1] * b[0])


def polygon_area(vertices: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise)."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    """Area centroid via the standard polygon integral."""
    v = np.asarray(vertices, dtype=float)
    a = polygon_area(v)
    if abs(a) <= 0.0:
        raise ZeroArea("polygon has no area")
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    cx = float(np.sum((x + xn) * cross)) / (6.0 * a)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * a)
    return np.array([cx, cy])


def clip_halfplane(vertices: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Clip a convex polygon to {q : normal . q <= offset}."""
    v = np.asarray(vertices, dtype=float)
    if len(v) == 0:
        return v.reshape(0, 2)
    out = []
    n = len(v)
    side = v @ normal - offset
    for i in range(n):
        cur, nxt = v[i], v[(i + 1) % n]
        s_cur, s_nxt = side[i], side[(i + 1) % n]
        if s_cur <= 0.0:
            out.append(cur)
        if (s_cur <= 0.0) != (s_nxt <= 0.0):
            t = s_cur / (s_cur - s_nxt)
            out.append(cur + t * (nxt - cur))
    return np.asarray(out).reshape(-1, 2)


@dataclass(frozen=True)
class MissionSpace:
    """Strictly convex polygon, counter-clockwise vertices, uniform density."""

    vertices: np.ndarray
    density: str = UNIFORM

    @classmethod
    def make(cls, vertices, density: str = UNIFORM) -> "MissionSpace":
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DegeneratePolygon("need at least three planar vertices")
        if not np.all(np.isfinite(v)):
            raise DegeneratePolygon("non-finite vertex")
        if density != UNIFORM:
            raise DegeneratePolygon(f"unsupported density {density!r}")
        area = polygon_area(v)
        if area <= 0.0:
            raise DegeneratePolygon("vertices must be counter-clockwise with positive area")
        scale = float(np.max(np.abs(v))) or 1.0
        n = len(v)
        for i in range(n):
            a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
            cross = cross2(b - a, c - b)
            if cross <= CONVEXITY_TOL * scale * scale:
                raise DegeneratePolygon(f"not strictly convex at vertex {(i + 1) % n}")
        v = v.copy()
        v.flags.writeable = False
        return cls(v, density)

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def contains(self, q, tol: float = 1e-12) -> bool:
        q = np.asarray(q, dtype=float)
        v = self.vertices
        n = len(v)
        for i in range(n):
            edge = v[(i + 1) % n] - v[i]
            if cross2(edge, q - v[i]) < -tol:
                return False
        return True


@dataclass(frozen=True)
class VoronoiCell:
    owner: int
    polygon: np.ndarray  # (k, 2), counter-clockwise; may be empty
    centroid: np.ndarray
    mass: float


def _spread_ties(positions: np.ndarray) -> np.ndarray:
    """Deterministically separate generators that coincide within TIE_EPS."""
    p = np.asarray(positions, dtype=float).copy()
    n = len(p)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(p[j] - p[i]) < TIE_EPS:
                angle = 2.399963229728653 * (j + 1)  # golden angle, index-keyed
                p[j] = p[j] + TIE_EPS * (j + 1) * np.array([np.cos(angle), np.sin(angle)])
    return p


def voronoi_partition(positions, space: MissionSpace) -> list[VoronoiCell]:
    """Voronoi cells of the generators clipped to the mission space.

    Coincident generators are spread by ~1e-9 before clipping so every
    robot keeps a well-defined (possibly empty) cell.
    """
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 1:
        raise DegeneratePolygon("need at least one generator")
    p = _spread_ties(p)
    cells = []
    for i in range(len(p)):
        poly = space.vertices
        for j in range(len(p)):
            if j == i or len(poly) == 0:
                continue
            normal = p[j] - p[i]
            offset = float(normal @ (p[i] + p[j])) / 2.0
            poly = clip_halfplane(poly, normal, offset)
        area = polygon_area(poly) if len(poly) >= 3 else 0.0
        if area > 0.0:
            centroid = polygon_centroid(poly)
        else:
            poly = np.zeros((0, 2))
            centroid = p[i].copy()
        cells.append(VoronoiCell(owner=i, polygon=poly, centroid=centroid, mass=area))
    return cells


def cell_centroid(cell_polygon, density: str = UNIFORM) -> np.ndarray:
    """Uniform-density centroid of a cell polygon."""
    if density != UNIFORM:
        raise DegeneratePolygon(f"unsupported density {density!r}")
    poly = np.asarray(cell_polygon, dtype=float)
    if len(poly) < 3 or polygon_area(poly) <= 0.0:
        raise ZeroArea("cell has no area")
    return polygon_centroid(poly)


def _triangle_moment(a, b, c, point) -> float:
    """Integral of ||q - point||^2 over triangle (a, b, c)."""
    area = 0.5 * abs(cross2(b - a, c - a))
    if area == 0.0:
        return 0.0
    sides = (np.dot(b - a, b - a) + np.dot(c - b, c - b) + np.dot(a - c, a - c))
    ct = (a + b + c) / 3.0
    return area * (sides / 36.0 + float(np.dot(ct - point, ct - point)))


def cell_quadratic_moment(cell_polygon, point) -> float:
    """Integral of squared distance to `point` over a convex polygon."""
    poly = np.asarray(cell_polygon, dtype=float)
    point = np.asarray(point, dtype=float)
    if len(poly) < 3:
        return 0.0
    total = 0.0
    for t in range(1, len(poly) - 1):
        total += _triangle_moment(poly[0], poly[t], poly[t + 1], point)
    return total


def coverage_cost(positions, cells) -> float:
    """Locational cost: sum over robots of the squared-distance integral
    over their own cell."""
    p = np.asarray(positions, dtype=float)
    total = 0.0
    for cell in cells:
        total += cell_quadratic_moment(cell.polygon, p[cell.owner])
    return total
