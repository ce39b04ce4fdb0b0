"""Edge-squared metric, Euclidean spanners and the constant-factor approximation.

The edge-squared distance is the shortest-path metric of the complete graph
on the sites with squared Euclidean edge lengths.  A quarter of it bounds the
nearest-neighbor distance from above and a twelfth from below, so a shortest
path over a sparse spanner pins the nearest-neighbor distance within a factor
of ``3 * (1 + eps + eps**2 / 2)``.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .geometry import GeometryError, PointSet
from .graph import WeightedGraph, shortest_path
from .results import DistanceResult


@dataclass(frozen=True)
class SpannerConfig:
    epsilon: float = 0.1
    method: str = "greedy"

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("spanner epsilon must lie in (0, 1]")
        if self.method not in ("greedy", "theta"):
            raise ValueError(f"unknown spanner method {self.method!r}")

    @property
    def stretch(self) -> float:
        return 1.0 + self.epsilon

    @property
    def squared_stretch(self) -> float:
        """Bound on spanner edge-squared distance over the exact one."""
        e = self.epsilon
        return 1.0 + e + 0.5 * e * e


def _check_pair(ps: PointSet, i, j):
    for k in (i, j):
        if not isinstance(k, (int, np.integer)) or not 0 <= k < ps.n:
            raise IndexError(f"invalid site index {k!r}")
    if i == j:
        raise ValueError("query needs two distinct sites")


def complete_edge_squared_graph(ps: PointSet) -> WeightedGraph:
    """Complete graph on the sites with squared Euclidean weights."""
    if ps.n < 2:
        raise GeometryError("edge-squared graph needs at least two sites")
    iu, ju = np.triu_indices(ps.n, k=1)
    w = pdist(ps.points, "sqeuclidean")
    return WeightedGraph(ps.n, iu, ju, w)


def euclidean_spanner(ps: PointSet, cfg: SpannerConfig = SpannerConfig()) -> WeightedGraph:
    """A ``(1 + eps)``-spanner of the complete Euclidean graph (Euclidean weights)."""
    if ps.n < 2:
        raise GeometryError("a spanner needs at least two sites")
    if cfg.method == "greedy":
        return _greedy_spanner(ps, cfg.stretch)
    return _theta_spanner(ps, cfg.epsilon)


def _greedy_spanner(ps: PointSet, t: float) -> WeightedGraph:
    n = ps.n
    iu, ju = np.triu_indices(n, k=1)
    lengths = pdist(ps.points)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    edges = []
    for k in np.argsort(lengths, kind="stable"):
        a, b, length = int(iu[k]), int(ju[k]), float(lengths[k])
        if _within(adj, a, b, t * length):
            continue
        adj[a].append((b, length))
        adj[b].append((a, length))
        edges.append((a, b, length))
    return WeightedGraph.from_edges(n, edges)


def _within(adj, s: int, t: int, limit: float) -> bool:
    """Whether the current graph joins ``s`` and ``t`` within ``limit``."""
    dist = {s: 0.0}
    heap = [(0.0, s)]
    while heap:
        d, a = heapq.heappop(heap)
        if a == t:
            return True
        if d > dist[a]:
            continue
        for b, w in adj[a]:
            nd = d + w
            if nd <= limit and nd < dist.get(b, math.inf):
                dist[b] = nd
                heapq.heappush(heap, (nd, b))
    return False


def _theta_spanner(ps: PointSet, eps: float) -> WeightedGraph:
    if ps.d != 2:
        raise GeometryError("the theta-graph spanner is implemented for d = 2 only")
    # stretch of the theta graph with k cones is 1 / (1 - 2 sin(pi / k)) for k >= 9
    k = 9
    while 1.0 / (1.0 - 2.0 * math.sin(math.pi / k)) > 1.0 + eps:
        k += 1
    pts = ps.points
    cone_width = 2 * math.pi / k
    bisectors = np.array([[math.cos((c + 0.5) * cone_width), math.sin((c + 0.5) * cone_width)]
                          for c in range(k)])
    edges = {}
    for a in range(ps.n):
        diff = pts - pts[a]
        ang = np.mod(np.arctan2(diff[:, 1], diff[:, 0]), 2 * math.pi)
        cone = np.minimum((ang // cone_width).astype(int), k - 1)
        for c in range(k):
            members = np.flatnonzero((cone == c) & (np.arange(ps.n) != a))
            if len(members) == 0:
                continue
            proj = diff[members] @ bisectors[c]
            b = int(members[np.argmin(proj)])
            key = (min(a, b), max(a, b))
            edges[key] = float(np.linalg.norm(diff[b]))
    return WeightedGraph.from_edges(ps.n, [(a, b, w) for (a, b), w in sorted(edges.items())])


def squared(g: WeightedGraph) -> WeightedGraph:
    """Same edges with squared weights."""
    return g.with_weights(g.w ** 2)


def dense_shortest_distances(weights: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-source Dijkstra on a dense weight matrix (O(n^2) with numpy)."""
    n = weights.shape[0]
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.intp)
    done = np.zeros(n, dtype=bool)
    dist[s] = 0.0
    for _ in range(n):
        cand = np.where(done, np.inf, dist)
        a = int(np.argmin(cand))
        if not np.isfinite(cand[a]):
            break
        done[a] = True
        alt = dist[a] + weights[a]
        better = (alt < dist) & ~done
        dist[better] = alt[better]
        pred[better] = a
    return dist, pred


def sqdist(ps: PointSet, i: int, j: int, mode: str = "exact",
           cfg: SpannerConfig | None = None, spanner: WeightedGraph | None = None) -> DistanceResult:
    """Edge-squared distance between sites ``i`` and ``j``.

    ``mode="exact"`` searches the complete graph.  ``mode="spanner"`` searches
    a spanner (built from ``cfg`` unless ``spanner`` is given) with squared
    weights; the certified interval then brackets the exact distance.
    """
    _check_pair(ps, i, j)
    t0 = time.perf_counter()
    if mode == "exact":
        W = squareform(pdist(ps.points, "sqeuclidean"))
        dist, pred = dense_shortest_distances(W, i)
        path = [j]
        while path[-1] != i:
            path.append(int(pred[path[-1]]))
        value = float(dist[j])
        return DistanceResult(i, j, "sqdist", value, value, value, path[::-1],
                              ps.points[path[::-1]],
                              runtime_ms=1e3 * (time.perf_counter() - t0),
                              extra={"mode": "exact"})
    if mode != "spanner":
        raise ValueError(f"unknown sqdist mode {mode!r}")
    cfg = cfg or SpannerConfig()
    g = spanner if spanner is not None else euclidean_spanner(ps, cfg)
    value, path = shortest_path(squared(g), i, j)
    return DistanceResult(i, j, "sqdist", value, value / cfg.squared_stretch, value, path,
                          ps.points[path], runtime_ms=1e3 * (time.perf_counter() - t0),
                          extra={"mode": "spanner", "epsilon": cfg.epsilon,
                                 "spanner_method": cfg.method})


def approx3_nn_distance(ps: PointSet, i: int, j: int, cfg: SpannerConfig | None = None,
                        spanner: WeightedGraph | None = None) -> DistanceResult:
    """Constant-factor estimate of the nearest-neighbor distance of two sites.

    With ``s`` the spanner edge-squared distance, the true value lies in
    ``[s / (12 (1 + eps + eps^2/2)), s / 4]``; the estimate is ``s / 4``.
    """
    cfg = cfg or SpannerConfig()
    t0 = time.perf_counter()
    sq = sqdist(ps, i, j, "spanner", cfg, spanner)
    s_hat = sq.estimate
    upper = s_hat / 4.0
    lower = s_hat / (12.0 * cfg.squared_stretch)
    return DistanceResult(i, j, "approx3", upper, lower, upper, sq.witness, sq.witness_points,
                          runtime_ms=1e3 * (time.perf_counter() - t0),
                          extra={"epsilon": cfg.epsilon, "spanner_method": cfg.method,
                                 "sqdist_spanner": s_hat})
