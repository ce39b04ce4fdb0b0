"""Brute-force ground truth for the nearest-neighbor distance.

A regular grid of cell centers is joined by a stencil of short lattice
directions; every edge is weighted by its exact nearest-neighbor length, so
the shortest grid path is a genuine path and its value overestimates the
true distance only through the restricted set of paths.  Sites (and any
extra anchor points) are joined to every grid node within two cell
diagonals, because the integrand vanishes at sites and the local geometry
there matters most.  Sites and anchors within four cell diagonals of each
other are also joined directly.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .edge_squared import sqdist
from .geometry import (BoundingBox, GeometryError, PointSet, PolylinePath, discretize_path,
                       segments_nn_length)
from .graph import WeightedGraph, path_from_predecessors, shortest_path_tree
from .results import DistanceResult

MAX_NODES = 5_000_000


@dataclass(frozen=True)
class GridOracleConfig:
    """Grid resolution (cells per axis), optional domain and stencil radius.

    ``stencil`` is the largest coordinate of a lattice step: 1 gives the
    8-neighborhood in the plane, 2 the 16-neighborhood, 4 (the default) 48
    step directions.
    With ``domain=None`` a cube around the points of interest is used, with a
    margin of half their largest pairwise distance.
    """

    resolution: int = 512
    domain: BoundingBox | None = None
    stencil: int = 4
    link_diagonals: float = 2.0

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError("oracle resolution must be at least 8")
        if self.stencil < 1:
            raise ValueError("stencil radius must be >= 1")


def stencil_offsets(d: int, radius: int) -> np.ndarray:
    """Primitive lattice steps with coordinates in [-radius, radius], one per direction pair."""
    steps = []
    for off in product(range(-radius, radius + 1), repeat=d):
        nz = [c for c in off if c != 0]
        if not nz or nz[0] < 0 or math.gcd(*[abs(c) for c in nz]) != 1:
            continue
        steps.append(off)
    return np.array(steps, dtype=np.intp)


def stencil_distortion(d: int, radius: int) -> float:
    """Worst ratio of stencil path length to Euclidean length (planar estimate).

    For two adjacent step directions at angle ``a`` the worst direction lies
    halfway between them and costs ``1 / cos(a / 2)``.
    """
    if d == 1:
        return 1.0
    steps = stencil_offsets(2, radius).astype(float)
    ang = np.sort(np.mod(np.arctan2(steps[:, 1], steps[:, 0]), np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + np.pi]]))
    return float(1.0 / np.cos(gaps.max() / 2))


def default_domain(pts) -> BoundingBox:
    """Cube around ``pts`` with margin of half their diameter."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    diam = float(pdist(pts).max()) if len(pts) > 1 else 1.0
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * float((hi - lo).max()) + 0.5 * diam
    return BoundingBox(center - half, center + half)


class GridOracle:
    """Grid graph over a domain with sites and optional anchors as extra nodes.

    Vertex numbering: grid nodes first, then the ``n`` sites, then anchors.
    """

    def __init__(self, ps: PointSet, cfg: GridOracleConfig = GridOracleConfig(), anchors=None):
        t0 = time.perf_counter()
        self.ps = ps
        self.cfg = cfg
        self.anchors = (np.empty((0, ps.d)) if anchors is None
                        else np.atleast_2d(np.asarray(anchors, dtype=float)))
        interest = np.vstack([ps.points, self.anchors])
        domain = cfg.domain or default_domain(interest)
        if domain.dim != ps.d:
            raise GeometryError("oracle domain dimension differs from the point set")
        if not np.all(domain.contains(interest)):
            raise GeometryError("oracle domain must contain every site and anchor")
        res = cfg.resolution
        if res ** ps.d > MAX_NODES:
            raise MemoryError(f"{res}^{ps.d} grid nodes exceed the oracle limit of {MAX_NODES}")
        self.domain = domain
        self.cell = domain.widths / res
        self.h = float(np.linalg.norm(self.cell))      # cell diagonal
        self.n_grid = res ** ps.d
        self.graph = self._build()
        self.build_ms = 1e3 * (time.perf_counter() - t0)
        self._trees: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- construction ---------------------------------------------------------

    def node_points(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.intp)
        res = self.cfg.resolution
        coords = np.stack(np.unravel_index(idx, (res,) * self.ps.d), axis=-1)
        return self.domain.lo + (coords + 0.5) * self.cell

    def vertex_points(self) -> np.ndarray:
        return np.vstack([self.node_points(np.arange(self.n_grid)), self.ps.points, self.anchors])

    def _build(self) -> WeightedGraph:
        ps, res, d = self.ps, self.cfg.resolution, self.ps.d
        shape = (res,) * d
        nodes = self.node_points(np.arange(self.n_grid))
        nearest = ps.nearest(nodes)[0]
        us, vs, ws = [], [], []
        grid_idx = np.arange(self.n_grid).reshape(shape)
        for off in stencil_offsets(d, self.cfg.stencil):
            src = grid_idx[tuple(slice(max(0, -o), res - max(0, o)) for o in off)].ravel()
            dst = grid_idx[tuple(slice(max(0, o), res - max(0, -o)) for o in off)].ravel()
            w = segments_nn_length(ps, nodes[src], nodes[dst], nearest[src], nearest[dst])
            us.append(src)
            vs.append(dst)
            ws.append(w)
        del nodes
        extra = np.vstack([ps.points, self.anchors])
        radius = self.cfg.link_diagonals * self.h
        for k, z in enumerate(extra):
            lo = np.floor((z - radius - self.domain.lo) / self.cell - 0.5).astype(int)
            hi = np.ceil((z + radius - self.domain.lo) / self.cell - 0.5).astype(int)
            lo, hi = np.clip(lo, 0, res - 1), np.clip(hi, 0, res - 1)
            box = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)],
                                       indexing="ij"), axis=-1).reshape(-1, d)
            idx = np.ravel_multi_index(box.T, shape)
            pts = self.node_points(idx)
            dist = np.linalg.norm(pts - z, axis=1)
            keep = (dist <= radius) & (dist > 0)
            idx, pts = idx[keep], pts[keep]
            if len(idx) == 0:
                raise GeometryError("resolution too coarse to attach a point to the grid")
            w = segments_nn_length(ps, np.repeat(z[None, :], len(pts), axis=0), pts)
            us.append(np.full(len(idx), self.n_grid + k))
            vs.append(idx)
            ws.append(w)
        # points a few cells apart are poorly served by the grid, join them directly
        close = cKDTree(extra).query_pairs(2 * radius, output_type="ndarray")
        if len(close):
            us.append(self.n_grid + close[:, 0])
            vs.append(self.n_grid + close[:, 1])
            ws.append(segments_nn_length(ps, extra[close[:, 0]], extra[close[:, 1]]))
        n_vertices = self.n_grid + len(extra)
        return WeightedGraph(n_vertices, np.concatenate(us), np.concatenate(vs), np.concatenate(ws))

    # -- queries ----------------------------------------------------------------

    def site_vertex(self, i: int) -> int:
        if not 0 <= i < self.ps.n:
            raise IndexError(f"invalid site index {i}")
        return self.n_grid + i

    def anchor_vertex(self, a: int) -> int:
        if not 0 <= a < len(self.anchors):
            raise IndexError(f"invalid anchor index {a}")
        return self.n_grid + self.ps.n + a

    def _tree(self, source: int):
        if source not in self._trees:
            dist, pred = shortest_path_tree(self.graph, [source])
            self._trees[source] = (dist[0], pred[0])
        return self._trees[source]

    def allowance(self, value: float) -> float:
        """Heuristic error allowance of a reported value.

        Combines the stencil's worst-case direction distortion with the
        second-order cost of attaching the two endpoints to the grid.
        """
        kappa = stencil_distortion(self.ps.d, self.cfg.stencil)
        return (kappa - 1.0) * value + 2.0 * self.h ** 2

    def vertex_distance(self, s: int, t: int) -> tuple[float, list[int]]:
        dist, pred = self._tree(s)
        return float(dist[t]), path_from_predecessors(pred, s, t)

    def witness_polyline(self, path: list[int]) -> PolylinePath:
        grid = [k for k in path if k < self.n_grid]
        pts = np.empty((len(path), self.ps.d))
        pts[[k < self.n_grid for k in path]] = self.node_points(grid) if grid else pts[:0]
        extra = np.vstack([self.ps.points, self.anchors])
        for pos, k in enumerate(path):
            if k >= self.n_grid:
                pts[pos] = extra[k - self.n_grid]
        return PolylinePath.from_points(pts)

    def query(self, i: int, j: int) -> DistanceResult:
        """Oracle distance between sites ``i`` and ``j`` with its witness polyline."""
        if i == j:
            raise ValueError("oracle query needs two distinct sites")
        t0 = time.perf_counter()
        value, path = self.vertex_distance(self.site_vertex(i), self.site_vertex(j))
        if not path:
            raise GeometryError("oracle grid does not connect the query sites")
        return self._result(i, j, value, path, t0)

    def anchor_query(self, a: int, b: int) -> DistanceResult:
        t0 = time.perf_counter()
        value, path = self.vertex_distance(self.anchor_vertex(a), self.anchor_vertex(b))
        return self._result(a, b, value, path, t0)

    def _result(self, i, j, value, path, t0) -> DistanceResult:
        allow = self.allowance(value)
        return DistanceResult(
            i, j, "oracle", value, max(0.0, value - allow), value, path,
            self.witness_polyline(path).vertices,
            runtime_ms=1e3 * (time.perf_counter() - t0) + self.build_ms,
            extra={"resolution": self.cfg.resolution, "stencil": self.cfg.stencil,
                   "error_allowance": allow},
        )


def grid_oracle_nn_distance(ps: PointSet, i: int, j: int,
                            cfg: GridOracleConfig = GridOracleConfig()) -> float:
    """Brute-force nearest-neighbor distance between sites ``i`` and ``j``."""
    return GridOracle(ps, cfg).query(i, j).estimate


def grid_oracle_point_distance(ps: PointSet, x, y,
                               cfg: GridOracleConfig = GridOracleConfig()) -> float:
    """Brute-force nearest-neighbor distance between arbitrary points ``x`` and ``y``."""
    oracle = GridOracle(ps, cfg, anchors=np.vstack([x, y]))
    return oracle.anchor_query(0, 1).estimate


@dataclass
class SandwichReport:
    i: int
    j: int
    oracle: float
    sqdist: float
    tol: float
    passed: bool

    @property
    def lower(self) -> float:
        return self.sqdist / 12.0

    @property
    def upper(self) -> float:
        return self.sqdist / 4.0


def sandwich_check(ps: PointSet, i: int, j: int, cfg: GridOracleConfig = GridOracleConfig(),
                   oracle: GridOracle | None = None, rel_tol: float = 0.02) -> SandwichReport:
    """Check ``sq/12 - tol <= oracle <= sq/4 + tol`` with ``tol = rel_tol * sq/4``."""
    oracle = oracle or GridOracle(ps, cfg)
    v = oracle.query(i, j).estimate
    q = sqdist(ps, i, j, "exact").estimate
    tol = rel_tol * q / 4.0
    return SandwichReport(i, j, v, q, tol, q / 12.0 - tol <= v <= q / 4.0 + tol)


@dataclass
class ShadowReport:
    """Edge-squared path built from breaking sequences along a site-to-site polyline."""

    sites: list[int]
    sq_length: float
    breaking_points: int


def breaking_shadow(ps: PointSet, path: PolylinePath, balance: bool = False) -> ShadowReport:
    """Shadow a polyline by the nearest sites of its breaking-sequence points.

    The polyline is cut wherever it passes through a site; each piece gets a
    breaking sequence and contributes the chain of nearest sites of its
    points.  The squared lengths of consecutive distinct sites add up to an
    edge-squared path between the two end sites.
    """
    v = path.vertices
    idx, dist = ps.nearest(v)
    at_site = np.flatnonzero(dist == 0)
    if len(at_site) < 2 or at_site[0] != 0 or at_site[-1] != len(v) - 1:
        raise GeometryError("polyline must start and end at sites")
    chain = [int(idx[0])]
    count = 0
    for a, b in zip(at_site[:-1], at_site[1:]):
        if idx[a] == idx[b]:
            continue
        piece = PolylinePath(v[a:b + 1])
        seq = discretize_path(ps, piece, "breaking", balance=balance)
        count += len(seq)
        near = ps.nearest(np.array([pt for _, pt in seq]))[0]
        chain += [int(k) for k in near] + [int(idx[b])]
    sites = [chain[0]] + [k for prev, k in zip(chain[:-1], chain[1:]) if k != prev]
    pts = ps.points[sites]
    sq = float(np.sum(np.sum(np.diff(pts, axis=0) ** 2, axis=1)))
    return ShadowReport(sites, sq, count)
