import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nnmetric.graph import (GraphError, WeightedGraph, read_graph, shortest_path,
                            shortest_path_tree, write_graph)


def brute_force(g, s, t):
    """Minimum weight over every simple s-t path, by exhaustive depth-first enumeration."""
    adj = {k: {} for k in range(g.n)}
    for a, b, x in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
        adj[a][b] = min(adj[a].get(b, math.inf), x)
        adj[b][a] = min(adj[b].get(a, math.inf), x)
    best = math.inf
    stack = [(s, 0.0, {s})]
    while stack:
        a, total, seen = stack.pop()
        if a == t:
            best = min(best, total)
            continue
        for b, x in adj[a].items():
            if b not in seen:
                stack.append((b, total + x, seen | {b}))
    return best


def test_examples():
    g = WeightedGraph.from_edges(2, [(0, 1, 4.0)])
    assert shortest_path(g, 0, 1) == (4.0, [0, 1])
    tri = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 4.0)])
    assert shortest_path(tri, 0, 2) == (2.0, [0, 1, 2])
    split = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert shortest_path(split, 0, 3) == (math.inf, [])
    assert shortest_path(split, 2, 2) == (0.0, [2])


def test_validation():
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(2, [(0, 0, 1.0)])
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(2, [(0, 1, -1.0)])
    with pytest.raises(GraphError):
        WeightedGraph.from_edges(2, [(0, 2, 1.0)])
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    with pytest.raises(GraphError):
        shortest_path(g, 0, 5)


@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 8))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs), unique=True))
    weights = draw(st.lists(st.floats(0, 10), min_size=len(chosen), max_size=len(chosen)))
    return WeightedGraph.from_edges(n, [(a, b, w) for (a, b), w in zip(chosen, weights)])


@given(small_graphs(), st.data())
def test_matches_brute_force(g, data):
    s = data.draw(st.integers(0, g.n - 1))
    t = data.draw(st.integers(0, g.n - 1))
    d, path = shortest_path(g, s, t)
    ref = 0.0 if s == t else brute_force(g, s, t)
    assert d == pytest.approx(ref, abs=1e-12)
    if math.isfinite(d):
        assert path[0] == s and path[-1] == t
        assert g.path_weight(path) == pytest.approx(d, abs=1e-12)
    dist, _ = shortest_path_tree(g, [s])
    assert dist[0, t] == pytest.approx(ref, abs=1e-9) or (math.isinf(ref) and math.isinf(dist[0, t]))


def test_twelve_vertex_graphs_match_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(3):
        n = 12
        mask = rng.random((n, n)) < 0.3
        edges = [(a, b, float(rng.random() * 5)) for a in range(n) for b in range(a + 1, n) if mask[a, b]]
        g = WeightedGraph.from_edges(n, edges)
        for t in (5, 11):
            d, _ = shortest_path(g, 0, t)
            ref = brute_force(g, 0, t)
            assert d == pytest.approx(ref, abs=1e-12) or (math.isinf(d) and math.isinf(ref))


def test_large_graph_uses_compiled_search():
    rng = np.random.default_rng(0)
    n = 30_000
    u = rng.integers(0, n, 250_000)
    v = (u + rng.integers(1, n, 250_000)) % n
    g = WeightedGraph(n, u, v, rng.random(250_000))
    d, path = shortest_path(g, 0, 17)
    assert path[0] == 0 and path[-1] == 17
    assert g.path_weight(path) == pytest.approx(d)
    assert d == pytest.approx(shortest_path_tree(g, [0])[0][0, 17])


def test_parallel_edges_use_lightest():
    g = WeightedGraph.from_edges(2, [(0, 1, 3.0), (1, 0, 1.0)])
    assert shortest_path(g, 0, 1)[0] == 1.0
    assert shortest_path_tree(g, [0])[0][0, 1] == 1.0


def test_zero_weight_edges_survive_sparse_search():
    g = WeightedGraph.from_edges(3, [(0, 1, 0.0), (1, 2, 2.0)])
    assert shortest_path_tree(g, [0])[0][0, 2] == 2.0


def test_round_trip_with_and_without_types(tmp_path):
    g = WeightedGraph.from_edges(4, [(0, 1, 0.1), (1, 2, 1 / 3), (2, 3, 1e-300)], types=[1, 2, 3])
    for with_types in (False, True):
        path = tmp_path / f"g{with_types}.txt"
        write_graph(g, path, with_types=with_types)
        back = read_graph(path)
        assert back.n == g.n and np.array_equal(back.w, g.w)
        assert np.array_equal(back.u, g.u) and np.array_equal(back.v, g.v)
        assert (back.types is not None) == with_types
    buf = io.StringIO()
    write_graph(g, buf)
    assert buf.getvalue().splitlines()[0] == "nnmetric-graph v1 4 3"
    assert buf.getvalue().splitlines()[2] == "1 2 0.3333333333333333 2"


def test_read_rejects_bad_files():
    with pytest.raises(GraphError):
        read_graph(io.StringIO("graph 4 3\n"))
    with pytest.raises(GraphError):
        read_graph(io.StringIO("nnmetric-graph v1 3 2\n0 1 1.0\n"))
    with pytest.raises(GraphError):
        read_graph(io.StringIO("nnmetric-graph v1 3 2\n0 1 1.0\n1 2 1.0 2\n"))
