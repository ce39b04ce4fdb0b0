import math

import numpy as np
import pytest

from nnmetric.geometry import BoundingBox, GeometryError, PointSet, PolylinePath, polyline_nn_length
from nnmetric.oracle import (GridOracle, GridOracleConfig, breaking_shadow, default_domain,
                             grid_oracle_nn_distance, sandwich_check, stencil_distortion,
                             stencil_offsets)

TWO = PointSet([[0.0, 0.0], [2.0, 0.0]])
COLLINEAR = PointSet([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])


def test_stencil():
    assert len(stencil_offsets(2, 1)) == 4
    assert len(stencil_offsets(2, 2)) == 8
    assert len(stencil_offsets(2, 4)) == 24
    assert len(stencil_offsets(3, 1)) == 13
    assert stencil_distortion(2, 1) == pytest.approx(1 / math.cos(math.pi / 8))
    assert stencil_distortion(2, 4) < 1.01


def test_config_limits():
    with pytest.raises(ValueError):
        GridOracleConfig(resolution=4)
    with pytest.raises(MemoryError):
        GridOracle(PointSet(np.random.default_rng(0).random((3, 3))), GridOracleConfig(512))


def test_default_domain_margin():
    box = default_domain(COLLINEAR.points)
    # margin of half the diameter (here 1) beyond the points on every axis
    assert np.all(box.lo <= COLLINEAR.points.min(axis=0) - 1.0)
    assert np.all(box.hi >= COLLINEAR.points.max(axis=0) + 1.0)
    assert box.widths[0] == box.widths[1]


def test_two_sites():
    assert grid_oracle_nn_distance(TWO, 0, 1) == pytest.approx(1.0, abs=0.01)


def test_collinear():
    assert grid_oracle_nn_distance(COLLINEAR, 0, 2) == pytest.approx(0.5, abs=0.01)


def test_result_fields_and_witness():
    oracle = GridOracle(TWO, GridOracleConfig(128))
    r = oracle.query(0, 1)
    assert r.extra["resolution"] == 128 and r.extra["error_allowance"] > 0
    assert r.certified_lower <= r.estimate == r.certified_upper
    path = PolylinePath(r.witness_points)
    assert polyline_nn_length(TWO, path) == pytest.approx(r.estimate, abs=1e-12)
    assert np.array_equal(path.start, TWO.points[0]) and np.array_equal(path.end, TWO.points[1])
    with pytest.raises(ValueError):
        oracle.query(1, 1)


def test_refinement_converges_from_above():
    ps = PointSet(np.random.default_rng(2).random((5, 2)))
    vals = [GridOracle(ps, GridOracleConfig(res)).query(0, 3).estimate for res in (64, 128, 256)]
    assert vals[0] >= vals[1] - 1e-3 * vals[1] and vals[1] >= vals[2] - 1e-3 * vals[2]


def test_sandwich_examples():
    rep = sandwich_check(TWO, 0, 1)
    assert rep.sqdist == 4.0 and rep.passed
    assert rep.lower == pytest.approx(1 / 3) and rep.upper == 1.0
    rep = sandwich_check(COLLINEAR, 0, 2)
    assert rep.sqdist == 2.0 and rep.passed and rep.oracle == pytest.approx(0.5, abs=0.01)


def test_sandwich_random_cloud():
    ps = PointSet(np.random.default_rng(9).random((20, 2)))
    oracle = GridOracle(ps, GridOracleConfig(256))
    for j in range(1, 20):
        assert sandwich_check(ps, 0, j, oracle=oracle).passed


def test_domain_must_contain_sites():
    with pytest.raises(GeometryError):
        GridOracle(TWO, GridOracleConfig(64, domain=BoundingBox(np.zeros(2), np.ones(2))))


def test_breaking_shadow_bound():
    ps = PointSet(np.random.default_rng(6).random((7, 2)))
    oracle = GridOracle(ps, GridOracleConfig(256))
    for j in range(1, 7):
        r = oracle.query(0, j)
        sh = breaking_shadow(ps, PolylinePath(r.witness_points))
        assert sh.sites[0] == 0 and sh.sites[-1] == j
        assert sh.sq_length <= 12 * r.estimate
    with pytest.raises(GeometryError):
        breaking_shadow(ps, PolylinePath(np.array([[5.0, 5.0], [6.0, 6.0]])))
