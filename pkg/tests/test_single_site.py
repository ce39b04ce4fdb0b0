import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nnmetric.geometry import GeometryError, PointSet, polyline_nn_length, segment_nn_length
from nnmetric.oracle import GridOracleConfig, grid_oracle_point_distance
from nnmetric.single_site import (single_site_geodesic_path, single_site_nn_distance,
                                  single_site_nn_distances, site_to_point_nn_distance)

O = (0.0, 0.0)


def polar(r, a):
    return np.array([r * math.cos(a), r * math.sin(a)])


def test_opposite_points_are_one_apart():
    assert single_site_nn_distance(O, (1, 0), (-1, 0)) == 1.0


def test_right_angle_branches_agree():
    assert single_site_nn_distance(O, (1, 0), (0, 1)) == pytest.approx(1.0, abs=1e-15)
    r1, r2 = 1.3, 0.7
    below = single_site_nn_distance(O, polar(r1, 0), polar(r2, math.pi / 2 - 1e-9))
    above = single_site_nn_distance(O, polar(r1, 0), polar(r2, math.pi / 2 + 1e-9))
    assert below == pytest.approx(above, abs=1e-8)
    assert above == pytest.approx(0.5 * (r1 ** 2 + r2 ** 2))


def test_sixty_degrees():
    x, y = polar(1, 0), polar(1, math.pi / 3)
    assert single_site_nn_distance(O, x, y) == pytest.approx(math.sqrt(3) / 2, rel=1e-14)


def test_sixty_degrees_against_grid_oracle():
    ps = PointSet([O])
    x, y = polar(1, 0.2), polar(1, 0.2 + math.pi / 3)
    v = grid_oracle_point_distance(ps, x, y, GridOracleConfig(512))
    assert v == pytest.approx(math.sqrt(3) / 2, abs=0.01)


def test_endpoint_at_site():
    assert single_site_nn_distance(O, O, (3, 4)) == 12.5
    assert single_site_nn_distance(O, O, O) == 0.0


def test_three_dimensions_reduce_to_the_plane():
    p = np.array([1.0, -2.0, 0.5])
    rot = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))[0]
    x2, y2 = polar(1.2, 0.1), polar(0.8, 1.0)
    x = p + rot @ np.r_[x2, 0]
    y = p + rot @ np.r_[y2, 0]
    assert single_site_nn_distance(p, x, y) == pytest.approx(single_site_nn_distance(O, x2, y2), rel=1e-13)


def test_precondition_checked_with_point_set():
    ps = PointSet([[0.0, 0.0], [2.0, 0.0]])
    with pytest.raises(GeometryError):
        single_site_nn_distance((0, 0), (0.5, 0), (1.8, 0), ps)
    assert single_site_nn_distance((0, 0), (0.5, 0), (0, 0.5), ps) == pytest.approx(0.25)
    with pytest.raises(GeometryError):
        single_site_nn_distance((0, 0), (1, 0, 0), (0, 1))


def test_site_to_point():
    assert site_to_point_nn_distance(O, (1, 0)) == 0.5
    assert site_to_point_nn_distance(O, O) == 0.0
    assert site_to_point_nn_distance(O, (0, 2)) == 2.0


radius = st.floats(0.01, 5)
angle = st.floats(0, 2 * math.pi)


@given(radius, radius, angle, angle)
def test_symmetry_and_dominance(r1, r2, a, b):
    x, y = polar(r1, a), polar(r2, b)
    v = single_site_nn_distance(O, x, y)
    assert v == pytest.approx(single_site_nn_distance(O, y, x), rel=1e-12)
    assert v <= 0.5 * (r1 ** 2 + r2 ** 2) * (1 + 1e-12)
    # the straight segment from x to y is a feasible path for a lone site
    if np.linalg.norm(y - x) > 1e-9:
        assert v <= segment_nn_length(PointSet([O]), x, y) * (1 + 1e-12)


@given(radius, radius, angle, angle)
def test_vectorized_matches_scalar(r1, r2, a, b):
    x, y = polar(r1, a), polar(r2, b)
    assert single_site_nn_distances(O, x[None], y[None])[0] == pytest.approx(
        single_site_nn_distance(O, x, y), rel=1e-12, abs=1e-300)


def test_geodesic_path_wide_angle_is_through_site():
    path = single_site_geodesic_path(O, (1, 0), (-1, 0), 32)
    assert np.array_equal(path.vertices, np.array([[1.0, 0], [0, 0], [-1, 0]]))


def test_geodesic_path_converges():
    x, y = polar(1.0, 0.3), polar(1.4, 1.2)
    exact = single_site_nn_distance(O, x, y)
    ps = PointSet([O])
    gaps = [polyline_nn_length(ps, single_site_geodesic_path(O, x, y, k)) / exact - 1
            for k in (10, 100, 10_000)]
    assert gaps[0] >= gaps[1] >= gaps[2] >= -1e-12
    assert gaps[2] < 1e-4


def test_geodesic_path_is_planar_and_sampled():
    p = np.array([0.2, 0.1, -0.3])
    x, y = p + np.array([1.0, 0.2, 0.1]), p + np.array([0.3, 0.9, -0.4])
    path = single_site_geodesic_path(p, x, y, 50)
    assert path.n_segments == 50
    normal = np.cross(x - p, y - p)
    normal /= np.linalg.norm(normal)
    assert np.max(np.abs((path.vertices - p) @ normal)) < 1e-12
    with pytest.raises(ValueError):
        single_site_geodesic_path(p, x, y, 0)
