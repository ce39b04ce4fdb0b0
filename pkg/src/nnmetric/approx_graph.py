"""Approximation graph over Steiner points and sites, and the (1+ε) distance query.

Vertices are the Steiner points of a δ-sample followed by the ``n`` sites.
Edges come in three families:

1. two Steiner points inside the same Voronoi in-ball ``B(p_i, r_i)``,
   weighted by their exact single-site geodesic distance;
2. any other pair of Steiner points at most ``C2 δ^(2/3) max(dnn)`` apart,
   weighted by ``max(dnn) * length``;
3. a site and a Steiner point of its in-ball, weighted by ``|p s|^2 / 2``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .geometry import BoundingBox, GeometryError, PointSet, PolylinePath, voronoi_inradii
from .graph import WeightedGraph, shortest_path
from .results import DistanceResult
from .single_site import single_site_geodesic_path, single_site_nn_distances
from .steiner import DeltaSample, compute_exclusion_radii, generate_delta_sample

IN_BALL, LOCAL, SITE = 1, 2, 3


@dataclass(frozen=True)
class ApproxGraphConstants:
    """``c2`` scales the local edge radius; ``c4`` only enters the reported bounds."""

    c2: float = 2.0
    c4: float = 60.0

    def __post_init__(self):
        if not (self.c2 > 0 and self.c4 > 0):
            raise ValueError("approximation constants must be positive")


def epsilon_to_delta(epsilon: float, constants: ApproxGraphConstants = ApproxGraphConstants()) -> float:
    """Sampling density ``δ = (ε / C4)^(3/2)``, capped at 1/10."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return min((epsilon / constants.c4) ** 1.5, 0.1)


def default_sample_domain(ps: PointSet, margin_frac: float = 0.25) -> BoundingBox:
    diam = float(pdist(ps.points).max()) if ps.n > 1 else 1.0
    return BoundingBox.around(ps.points, margin_frac * diam)


@dataclass(frozen=True)
class ApproxGraph:
    graph: WeightedGraph
    ps: PointSet
    sample: DeltaSample
    constants: ApproxGraphConstants
    steiner_dnn: np.ndarray
    steiner_site: np.ndarray
    inradii: np.ndarray
    build_ms: float = 0.0

    @property
    def n_steiner(self) -> int:
        return len(self.sample.points)

    @property
    def delta(self) -> float:
        return self.sample.delta

    def site_vertex(self, i: int) -> int:
        if not 0 <= i < self.ps.n:
            raise IndexError(f"invalid site index {i}")
        return self.n_steiner + i

    def vertex_points(self) -> np.ndarray:
        return np.vstack([self.sample.points, self.ps.points])

    def edge_counts(self) -> dict[int, int]:
        kinds, counts = np.unique(self.graph.types, return_counts=True)
        return {int(k): int(c) for k, c in zip(kinds, counts)}


def _in_ball_members(ps, pts, site, dist, r):
    """Indices of Steiner points lying in the in-ball of each site."""
    inside = dist <= r[site]
    order = np.argsort(site[inside], kind="stable")
    idx = np.flatnonzero(inside)[order]
    bounds = np.searchsorted(site[idx], np.arange(ps.n + 1))
    return [idx[bounds[i]:bounds[i + 1]] for i in range(ps.n)], inside


def _local_pairs(pts, dnn, radius_factor):
    """Pairs ``a < b`` with ``|ab| <= radius_factor * max(dnn_a, dnn_b)``."""
    m = len(pts)
    if m < 2:
        return np.empty(0, np.intp), np.empty(0, np.intp)
    tree = cKDTree(pts)
    rad = radius_factor * dnn
    # bucket by radius so each range query uses a radius within 2x of what it needs
    level = np.floor(np.log2(np.maximum(rad, 1e-300))).astype(int)
    heads, tails = [], []
    for lv in np.unique(level):
        members = np.flatnonzero(level == lv)
        sub = cKDTree(pts[members])
        pairs = sub.sparse_distance_matrix(tree, float(rad[members].max()), output_type="ndarray")
        a = members[pairs["i"]]
        b = pairs["j"].astype(np.intp)
        keep = (a != b) & (pairs["v"] <= rad[a])
        heads.append(a[keep])
        tails.append(b[keep])
    a = np.concatenate(heads)
    b = np.concatenate(tails)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    key = np.unique(lo * m + hi)
    return key // m, key % m


def build_approx_graph(ps: PointSet, sample: DeltaSample,
                       constants: ApproxGraphConstants = ApproxGraphConstants()) -> ApproxGraph:
    """Assemble the three edge families over ``sample.points`` and the sites."""
    t0 = time.perf_counter()
    if ps.n < 2:
        raise GeometryError("the approximation graph needs at least two sites")
    u_expected = compute_exclusion_radii(ps, sample.delta)
    if sample.points.shape[1:] != (ps.d,) or len(sample.exclusion_radii) != ps.n \
            or not np.allclose(sample.exclusion_radii, u_expected, rtol=1e-12, atol=0):
        raise GeometryError("delta-sample does not belong to this point set")
    pts = sample.points
    m = len(pts)
    r = voronoi_inradii(ps)
    site, dnn = ps.nearest(pts) if m else (np.empty(0, np.intp), np.empty(0))
    members, in_ball = _in_ball_members(ps, pts, site, dnn, r)

    us, vs, ws, ts = [], [], [], []
    # type 1: all pairs inside one in-ball, exact single-site geodesic
    for i, mem in enumerate(members):
        if len(mem) < 2:
            continue
        a, b = np.triu_indices(len(mem), k=1)
        a, b = mem[a], mem[b]
        us.append(a)
        vs.append(b)
        ws.append(single_site_nn_distances(ps.points[i], pts[a], pts[b]))
        ts.append(np.full(len(a), IN_BALL, np.int8))
    # type 2: short pairs that are not both in one in-ball
    radius_factor = constants.c2 * sample.delta ** (2.0 / 3.0)
    a, b = _local_pairs(pts, dnn, radius_factor)
    same_ball = in_ball[a] & in_ball[b] & (site[a] == site[b])
    a, b = a[~same_ball], b[~same_ball]
    us.append(a)
    vs.append(b)
    ws.append(np.maximum(dnn[a], dnn[b]) * np.linalg.norm(pts[a] - pts[b], axis=1))
    ts.append(np.full(len(a), LOCAL, np.int8))
    # type 3: site to the Steiner points of its in-ball
    for i, mem in enumerate(members):
        us.append(np.full(len(mem), m + i))
        vs.append(mem)
        ws.append(0.5 * np.sum((pts[mem] - ps.points[i]) ** 2, axis=1))
        ts.append(np.full(len(mem), SITE, np.int8))

    graph = WeightedGraph(m + ps.n, np.concatenate(us), np.concatenate(vs),
                          np.concatenate(ws), np.concatenate(ts))
    return ApproxGraph(graph, ps, sample, constants, dnn, site, r,
                       1e3 * (time.perf_counter() - t0))


def build_for_delta(ps: PointSet, delta: float, constants: ApproxGraphConstants = ApproxGraphConstants(),
                    domain: BoundingBox | None = None) -> ApproxGraph:
    """Sample the default domain at ``delta`` and build the graph."""
    t0 = time.perf_counter()
    sample = generate_delta_sample(ps, domain or default_sample_domain(ps), delta)
    g = build_approx_graph(ps, sample, constants)
    object.__setattr__(g, "build_ms", 1e3 * (time.perf_counter() - t0))
    return g


def ptas_bounds(d_a: float, delta: float, constants: ApproxGraphConstants) -> tuple[float, float]:
    """Interval for the true distance implied by the graph distance ``d_a``."""
    k = delta ** (2.0 / 3.0)
    lower = d_a / (1.0 + constants.c4 * k)
    shrink = 1.0 - constants.c2 * k
    upper = d_a / shrink if shrink > 0 else math.inf
    return lower, upper


def ptas_nn_distance(g: ApproxGraph, i: int, j: int, segments: int = 16) -> DistanceResult:
    """(1+ε)-style estimate of the nearest-neighbor distance of sites ``i`` and ``j``.

    The bounds use the configured constants and are advisory.
    """
    if i == j:
        raise ValueError("query needs two distinct sites")
    t0 = time.perf_counter()
    s, t = g.site_vertex(i), g.site_vertex(j)
    value, path = shortest_path(g.graph, s, t)
    if not path:
        raise GeometryError("approximation graph does not connect the sites; "
                            "delta too coarse or c2 too small")
    lower, upper = ptas_bounds(value, g.delta, g.constants)
    types = [int(g.graph.types[g.graph.edge_between(a, b)]) for a, b in zip(path[:-1], path[1:])]
    return DistanceResult(
        i, j, "ptas", value, lower, upper, path, witness_polyline(g, path, segments).vertices,
        runtime_ms=1e3 * (time.perf_counter() - t0),
        extra={"delta": g.delta, "c2": g.constants.c2, "c4": g.constants.c4,
               "steiner_points": g.n_steiner, "edges": g.graph.m, "edge_types": types,
               "build_ms": g.build_ms},
    )


def witness_polyline(g: ApproxGraph, path: list[int], segments: int = 16) -> PolylinePath:
    """Spatial polyline of a graph path; in-ball edges follow their curved geodesic."""
    pts = g.vertex_points()
    out = [pts[path[0]]]
    for a, b in zip(path[:-1], path[1:]):
        kind = g.graph.types[g.graph.edge_between(a, b)]
        if kind == IN_BALL:
            site = g.ps.points[g.steiner_site[a]]
            out.extend(single_site_geodesic_path(site, pts[a], pts[b], segments).vertices[1:])
        else:
            out.append(pts[b])
    return PolylinePath.from_points(np.vstack(out))


def validate_approx_graph(g: ApproxGraph, rtol: float = 1e-9) -> list[str]:
    """Re-derive every edge's family predicate and weight; returns the violations found."""
    gr, ps = g.graph, g.ps
    m = g.n_steiner
    pts = g.vertex_points()
    lo, hi = np.minimum(gr.u, gr.v), np.maximum(gr.u, gr.v)
    t = gr.types if gr.types is not None else np.zeros(gr.m, np.int8)
    bad: dict[int, str] = {}

    def flag(mask, why):
        for e in np.flatnonzero(mask):
            bad.setdefault(int(e), why)

    flag(~np.isin(t, (IN_BALL, LOCAL, SITE)), "unknown edge type")
    flag(lo >= m, "edge joins two sites")
    flag((hi >= m) != (t == SITE), "site edges and site-to-Steiner edges must coincide")
    expect = np.full(gr.m, np.nan)

    ok = (t == SITE) & (hi >= m) & (lo < m)
    site = hi[ok] - m
    gap = np.linalg.norm(pts[lo[ok]] - ps.points[site], axis=1)
    flag(_scatter(ok, gap > g.inradii[site] * (1 + 1e-12)), "Steiner point outside the site's in-ball")
    expect[ok] = 0.5 * gap ** 2

    steiner = hi < m
    a, b = np.where(steiner, lo, 0), np.where(steiner, hi, 0)
    sa, sb = g.steiner_site[a], g.steiner_site[b]
    in_a = np.linalg.norm(pts[a] - ps.points[sa], axis=1) <= g.inradii[sa]
    in_b = np.linalg.norm(pts[b] - ps.points[sb], axis=1) <= g.inradii[sb]
    both_in = steiner & (sa == sb) & in_a & in_b

    one = steiner & (t == IN_BALL)
    flag(one & ~both_in, "in-ball edge with endpoints outside a common in-ball")
    expect[one] = single_site_nn_distances(ps.points[sa[one]], pts[a[one]], pts[b[one]])

    loc = steiner & (t == LOCAL)
    length = np.linalg.norm(pts[a] - pts[b], axis=1)
    dmax = np.maximum(g.steiner_dnn[a], g.steiner_dnn[b])
    flag(loc & both_in, "local edge between points of one in-ball")
    radius = g.constants.c2 * g.delta ** (2.0 / 3.0) * dmax
    flag(loc & (length > radius * (1 + 1e-12)), "local edge longer than its radius")
    expect[loc] = (dmax * length)[loc]

    checked = ~np.isnan(expect)
    off = checked & ~np.isclose(gr.w, np.where(checked, expect, 0.0), rtol=rtol, atol=0.0)
    for e in np.flatnonzero(off):
        bad.setdefault(int(e), f"weight {float(gr.w[e])!r} differs from recomputed {float(expect[e])!r}")
    return [f"edge {e}: {why}" for e, why in sorted(bad.items())]


def _scatter(mask, values):
    out = np.zeros(len(mask), dtype=bool)
    out[mask] = values
    return out
