import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse.csgraph import floyd_warshall
from scipy.spatial.distance import pdist, squareform

from nnmetric.edge_squared import (SpannerConfig, approx3_nn_distance, complete_edge_squared_graph,
                                   euclidean_spanner, sqdist, squared)
from nnmetric.geometry import GeometryError, PointSet

COLLINEAR = PointSet([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
TWO = PointSet([[0.0, 0.0], [2.0, 0.0]])


def all_pairs(g):
    """Floyd-Warshall reference distances of a WeightedGraph."""
    dense = np.full((g.n, g.n), np.inf)
    dense[g.u, g.v] = np.minimum(dense[g.u, g.v], g.w)
    dense[g.v, g.u] = dense[g.u, g.v]
    np.fill_diagonal(dense, 0)
    return floyd_warshall(dense, directed=False)


def test_complete_graph_examples():
    g = complete_edge_squared_graph(TWO)
    assert g.m == 1 and g.w[0] == 4.0
    assert sorted(complete_edge_squared_graph(COLLINEAR).w) == [1.0, 1.0, 4.0]
    assert complete_edge_squared_graph(PointSet(np.random.default_rng(0).random((5, 2)))).m == 10
    with pytest.raises(GeometryError):
        complete_edge_squared_graph(PointSet([[0.0, 0.0]]))


def test_sqdist_examples():
    assert sqdist(COLLINEAR, 0, 2).estimate == 2.0
    assert sqdist(COLLINEAR, 0, 2).witness == [0, 1, 2]
    assert sqdist(PointSet([[0.0, 0.0], [0.3, 0.4]]), 0, 1).estimate == pytest.approx(0.25)
    with pytest.raises(ValueError):
        sqdist(TWO, 1, 1)
    with pytest.raises(IndexError):
        sqdist(TWO, 0, 2)


def test_sqdist_matches_floyd_warshall(rng):
    ps = PointSet(rng.random((30, 2)))
    ref = all_pairs(complete_edge_squared_graph(ps))
    for i, j in [(0, 1), (3, 17), (29, 4)]:
        assert sqdist(ps, i, j).estimate == pytest.approx(ref[i, j], rel=1e-13)


def test_sqdist_spanner_bounds_n50(rng):
    ps = PointSet(rng.random((50, 2)))
    cfg = SpannerConfig(0.3)
    spanner = euclidean_spanner(ps, cfg)
    exact = all_pairs(complete_edge_squared_graph(ps))
    for i in range(0, 50, 7):
        for j in range(i + 1, 50, 5):
            r = sqdist(ps, i, j, "spanner", cfg, spanner)
            assert exact[i, j] * (1 - 1e-12) <= r.estimate <= cfg.squared_stretch * exact[i, j] * (1 + 1e-12)
            assert r.certified_lower <= exact[i, j] * (1 + 1e-12)


@pytest.mark.parametrize("method", ["greedy", "theta"])
@pytest.mark.parametrize("eps", [0.2, 0.5])
def test_spanner_stretch(method, eps):
    ps = PointSet(np.random.default_rng(4).random((100, 2)))
    g = euclidean_spanner(ps, SpannerConfig(eps, method))
    euclid = squareform(pdist(ps.points))
    d = all_pairs(g)
    iu = np.triu_indices(ps.n, 1)
    assert np.all(d[iu] <= (1 + eps) * euclid[iu] * (1 + 1e-12))
    assert g.m < ps.n * (ps.n - 1) // 2


def test_spanner_small_cases():
    g = euclidean_spanner(TWO)
    assert g.m == 1 and g.w[0] == 2.0
    line = PointSet(np.c_[np.arange(8.0), np.zeros(8)])
    edges = {(min(a, b), max(a, b)) for a, b in zip(euclidean_spanner(line).u, euclidean_spanner(line).v)}
    assert all((k, k + 1) in edges for k in range(7))
    with pytest.raises(GeometryError):
        euclidean_spanner(PointSet(np.random.default_rng(0).random((5, 3))), SpannerConfig(0.5, "theta"))
    with pytest.raises(ValueError):
        SpannerConfig(0.0)
    with pytest.raises(ValueError):
        SpannerConfig(0.5, "wspd")


def test_approx3_examples():
    r = approx3_nn_distance(TWO, 0, 1)
    assert r.estimate == 1.0 and r.certified_upper == 1.0
    r = approx3_nn_distance(COLLINEAR, 0, 2)
    assert r.estimate == 0.5
    cfg = SpannerConfig(0.1)
    assert r.certified_upper / r.certified_lower == pytest.approx(3 * cfg.squared_stretch)


@given(st.integers(0, 10_000))
def test_sqdist_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    ps = PointSet(rng.random((8, 2)))
    i, j, k = rng.choice(8, 3, replace=False)
    d = lambda a, b: sqdist(ps, int(a), int(b)).estimate
    assert d(i, k) <= d(i, j) + d(j, k) + 1e-12


@given(st.integers(0, 10_000), st.sampled_from([0.1, 0.5, 1.0]))
def test_spanner_squared_stretch_property(seed, eps):
    rng = np.random.default_rng(seed)
    ps = PointSet(rng.random((12, 2)))
    cfg = SpannerConfig(eps)
    exact = all_pairs(complete_edge_squared_graph(ps))
    span = all_pairs(squared(euclidean_spanner(ps, cfg)))
    iu = np.triu_indices(12, 1)
    assert np.all(span[iu] >= exact[iu] * (1 - 1e-12))
    assert np.all(span[iu] <= cfg.squared_stretch * exact[iu] * (1 + 1e-12))


def test_result_dict_schema():
    d = approx3_nn_distance(COLLINEAR, 0, 2).to_dict(witness=True)
    assert {"i", "j", "algorithm", "estimate", "lower", "upper", "runtime_ms", "witness"} <= set(d)
    assert d["witness"] == [0, 1, 2]
    assert math.isfinite(d["lower"])
