from __future__ import annotations

import numpy as np
import pytest

from rigid_coverage.coverage import (
    MissionSpace,
    cell_centroid,
    cell_quadratic_moment,
    clip_halfplane,
    coverage_cost,
    polygon_area,
    polygon_centroid,
    voronoi_partition,
)
from rigid_coverage.errors import DegeneratePolygon, ZeroArea

UNIT_SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def quadrature_moment(polygon_test, point, grid=400):
    """Independent oracle: midpoint-rule integral of squared distance over
    the region where polygon_test(q) is true, on the unit square."""
    h = 1.0 / grid
    total = 0.0
    for i in range(grid):
        for j in range(grid):
            q = np.array([(i + 0.5) * h, (j + 0.5) * h])
            if polygon_test(q):
                total += float((q - point) @ (q - point)) * h * h
    return total


def square_space() -> MissionSpace:
    return MissionSpace.make(UNIT_SQUARE)


# -- polygon primitives --------------------------------------------------------

def test_polygon_area_and_centroid_square():
    v = np.asarray(UNIT_SQUARE, float)
    assert polygon_area(v) == pytest.approx(1.0)
    assert np.allclose(polygon_centroid(v), [0.5, 0.5])


def test_polygon_centroid_triangle():
    v = np.array([[0, 0], [1, 0], [0, 1]], float)
    assert np.allclose(polygon_centroid(v), [1 / 3, 1 / 3])


def test_centroid_left_half_square():
    half = np.array([[0, 0], [0.5, 0], [0.5, 1], [0, 1]], float)
    assert np.allclose(cell_centroid(half), [0.25, 0.5])


def test_clip_halfplane_splits_square():
    clipped = clip_halfplane(np.asarray(UNIT_SQUARE, float),
                             np.array([1.0, 0.0]), 0.5)
    assert polygon_area(clipped) == pytest.approx(0.5)


def test_mission_space_rejects_clockwise():
    with pytest.raises(DegeneratePolygon):
        MissionSpace.make(list(reversed(UNIT_SQUARE)))


def test_mission_space_rejects_collinear():
    with pytest.raises(DegeneratePolygon):
        MissionSpace.make([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]])


def test_zero_area_cell_raises():
    with pytest.raises(ZeroArea):
        cell_centroid(np.zeros((0, 2)))


# -- voronoi_partition -----------------------------------------------------------

def test_single_robot_owns_space():
    cells = voronoi_partition([[0.3, 0.7]], square_space())
    assert len(cells) == 1
    assert cells[0].mass == pytest.approx(1.0)
    assert np.allclose(cells[0].centroid, [0.5, 0.5])


def test_two_robots_split_at_bisector():
    cells = voronoi_partition([[0.25, 0.5], [0.75, 0.5]], square_space())
    assert cells[0].mass == pytest.approx(0.5)
    assert cells[1].mass == pytest.approx(0.5)
    assert max(cells[0].polygon[:, 0]) == pytest.approx(0.5)


def test_area_conservation_random(rng):
    space = square_space()
    for _ in range(20):
        pts = rng.random((int(rng.integers(2, 9)), 2))
        cells = voronoi_partition(pts, space)
        assert abs(sum(c.mass for c in cells) - 1.0) < 1e-9


def test_sample_points_assigned_to_nearest(rng):
    space = square_space()
    pts = rng.random((5, 2))
    cells = voronoi_partition(pts, space)
    for _ in range(1000):
        q = rng.random(2)
        owner = int(np.argmin(np.linalg.norm(pts - q, axis=1)))
        cell = cells[owner]
        # q must lie inside its nearest generator's cell polygon
        poly = cell.polygon
        n = len(poly)
        assert n >= 3
        for i in range(n):
            edge = poly[(i + 1) % n] - poly[i]
            assert float(edge[0] * (q - poly[i])[1] - edge[1] * (q - poly[i])[0]) > -1e-7


def test_coincident_generators_are_spread():
    cells = voronoi_partition([[0.5, 0.5], [0.5, 0.5]], square_space())
    assert abs(sum(c.mass for c in cells) - 1.0) < 1e-9
    assert all(c.mass > 0 for c in cells)


# -- coverage_cost ------------------------------------------------------------------

def test_cost_center_of_unit_square_closed_form():
    space = square_space()
    cells = voronoi_partition([[0.5, 0.5]], space)
    assert coverage_cost([[0.5, 0.5]], cells) == pytest.approx(1 / 6, abs=1e-12)


def test_cost_matches_quadrature_oracle():
    space = square_space()
    p = np.array([[0.3, 0.6]])
    cells = voronoi_partition(p, space)
    exact = coverage_cost(p, cells)
    approx = quadrature_moment(lambda q: True, p[0])
    assert exact == pytest.approx(approx, rel=1e-4)


def test_cost_two_cells_matches_quadrature():
    space = square_space()
    p = np.array([[0.25, 0.5], [0.75, 0.5]])
    cells = voronoi_partition(p, space)
    exact = coverage_cost(p, cells)
    left = quadrature_moment(lambda q: q[0] <= 0.5, p[0])
    right = quadrature_moment(lambda q: q[0] > 0.5, p[1])
    assert exact == pytest.approx(left + right, rel=1e-4)


def test_corner_costs_more_than_center():
    space = square_space()
    center = coverage_cost([[0.5, 0.5]], voronoi_partition([[0.5, 0.5]], space))
    corner = coverage_cost([[0.05, 0.05]], voronoi_partition([[0.05, 0.05]], space))
    assert corner > center


def test_two_symmetric_robots_beat_one_central():
    space = square_space()
    one = coverage_cost([[0.5, 0.5]], voronoi_partition([[0.5, 0.5]], space))
    pts = [[0.25, 0.5], [0.75, 0.5]]
    two = coverage_cost(pts, voronoi_partition(pts, space))
    assert two < one


def test_lloyd_descent_property(rng):
    space = square_space()
    pts = rng.random((4, 2))
    cells = voronoi_partition(pts, space)
    base = coverage_cost(pts, cells)
    for i in range(4):
        moved = pts.copy()
        moved[i] = cells[i].centroid
        # moving one robot to its cell centroid cannot increase the cost
        new_cost = sum(cell_quadratic_moment(cells[j].polygon, moved[j])
                       for j in range(4))
        assert new_cost <= base + 1e-12


def test_scale_equivariance(rng):
    pts = rng.random((3, 2))
    space = square_space()
    cells = voronoi_partition(pts, space)
    h1 = coverage_cost(pts, cells)
    alpha = 2.5
    big = MissionSpace.make(alpha * np.asarray(UNIT_SQUARE, float))
    cells2 = voronoi_partition(alpha * pts, big)
    h2 = coverage_cost(alpha * pts, cells2)
    assert h2 == pytest.approx(alpha ** 4 * h1, rel=1e-9)
