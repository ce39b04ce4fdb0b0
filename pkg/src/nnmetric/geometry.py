"""Point sets, nearest-site queries and exact nearest-neighbor line integrals.

The nearest-neighbor length of a curve is the integral of the distance to the
closest site along it.  On a straight segment the nearest site changes only
at bisector crossings, and between crossings the integrand is the distance
to a fixed point along a line, which has a closed-form antiderivative.  That
makes the integral over any polyline exact up to floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

# Relative slack used when comparing distances for ties.
TIE_RTOL = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input (dimension mismatch, degenerate segment, ...)."""


def _as_point(z, d: int) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != d:
        raise GeometryError(f"expected a {d}-dimensional point, got {z.shape[0]}")
    return z


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box given by per-axis lower and upper corners."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise GeometryError("box corners have different dimensions")
        if np.any(lo > hi):
            raise GeometryError("box has min > max on some axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, pts, atol: float = 0.0) -> np.ndarray | bool:
        pts = np.asarray(pts, dtype=float)
        inside = np.all((pts >= self.lo - atol) & (pts <= self.hi + atol), axis=-1)
        return bool(inside) if pts.ndim == 1 else inside

    @classmethod
    def around(cls, pts, margin: float) -> "BoundingBox":
        """Smallest box containing ``pts`` grown by ``margin`` on every side."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return cls(pts.min(axis=0) - margin, pts.max(axis=0) + margin)


class PointSet:
    """Immutable set of distinct sites with a kd-tree index.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Site coordinates.  Duplicates are rejected.
    """

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise GeometryError("a point set needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("point coordinates must be finite")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise GeometryError("duplicate points in input")
        pts.setflags(write=False)
        self._points = pts
        self._tree = cKDTree(pts)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def d(self) -> int:
        return self._points.shape[1]

    @property
    def tree(self) -> cKDTree:
        return self._tree

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i) -> np.ndarray:
        return self._points[i]

    def __repr__(self) -> str:
        return f"PointSet(n={self.n}, d={self.d})"

    def nearest(self, zs) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized nearest site for an (m, d) array; ties go to the lowest index."""
        zs = np.atleast_2d(np.asarray(zs, dtype=float))
        if zs.shape[1] != self.d:
            raise GeometryError(f"expected {self.d}-dimensional queries, got {zs.shape[1]}")
        k = min(self.n, 4)
        dist, idx = self._tree.query(zs, k=k)
        if k == 1:
            return idx.astype(np.intp), dist
        dist0 = dist[:, 0]
        tied = dist[:, 1] <= dist0 * (1 + TIE_RTOL) + 1e-300
        out_i = idx[:, 0].astype(np.intp)
        out_d = dist0.copy()
        for r in np.flatnonzero(tied):
            cand = self._tree.query_ball_point(zs[r], dist0[r] * (1 + TIE_RTOL) + 1e-300)
            out_i[r] = min(cand)
            out_d[r] = np.linalg.norm(zs[r] - self._points[out_i[r]])
        return out_i, out_d

    def dnn(self, zs) -> np.ndarray:
        """Distance to the nearest site, vectorized."""
        zs = np.atleast_2d(np.asarray(zs, dtype=float))
        return self._tree.query(zs, k=1)[0]


def nearest_site(ps: PointSet, z) -> tuple[int, float]:
    """Index of the nearest site to ``z`` and its distance (lowest index on ties)."""
    z = _as_point(z, ps.d)
    idx, dist = ps.nearest(z[None, :])
    return int(idx[0]), float(dist[0])


def second_nearest_distance(ps: PointSet, z) -> float:
    """Distance from ``z`` to its second-nearest site."""
    if ps.n < 2:
        raise GeometryError("second-nearest distance needs at least two sites")
    z = _as_point(z, ps.d)
    dist, _ = ps.tree.query(z, k=2)
    return float(dist[1])


def nearest_other_distances(ps: PointSet) -> np.ndarray:
    """For every site, the distance to the closest other site."""
    if ps.n < 2:
        raise GeometryError("Voronoi cell of a lone site is unbounded")
    dist, _ = ps.tree.query(ps.points, k=2)
    return dist[:, 1]


def voronoi_inradius(ps: PointSet, i: int) -> float:
    """Radius of the largest ball centered at site ``i`` inside its Voronoi cell."""
    if not 0 <= i < ps.n:
        raise IndexError(f"site index {i} out of range")
    return float(nearest_other_distances(ps)[i]) / 2.0


def voronoi_inradii(ps: PointSet) -> np.ndarray:
    return nearest_other_distances(ps) / 2.0


@dataclass(frozen=True)
class PolylinePath:
    """Piecewise linear path through ``vertices`` (at least two, consecutive distinct)."""

    vertices: np.ndarray
    cumlen: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise GeometryError("a polyline needs at least two vertices")
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(seg == 0):
            raise GeometryError("consecutive polyline vertices coincide")
        v.setflags(write=False)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "cumlen", cum)

    @classmethod
    def from_points(cls, pts) -> "PolylinePath":
        """Build a path after dropping repeated consecutive vertices."""
        pts = np.asarray(pts, dtype=float)
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
        return cls(pts[keep])

    @property
    def length(self) -> float:
        return float(self.cumlen[-1])

    @property
    def n_segments(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length ``s`` from the start (clamped to the path)."""
        s = min(max(s, 0.0), self.length)
        k = int(np.searchsorted(self.cumlen, s, side="right")) - 1
        k = min(max(k, 0), self.n_segments - 1)
        a, b = self.vertices[k], self.vertices[k + 1]
        seg = self.cumlen[k + 1] - self.cumlen[k]
        return a + (b - a) * ((s - self.cumlen[k]) / seg)

    def subpath(self, s0: float, s1: float) -> "PolylinePath":
        """The portion of the path between arc lengths ``s0 < s1``."""
        inner = self.vertices[(self.cumlen > s0) & (self.cumlen < s1)]
        return PolylinePath.from_points(np.vstack([self.point_at(s0), inner, self.point_at(s1)]))


# --- exact integration ---------------------------------------------------------


def _antideriv(x, h):
    """Antiderivative of sqrt(x^2 + h^2) in x (h >= 0), vectorized."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    r = np.hypot(x, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(h > 0, h * h * np.arcsinh(x / np.where(h > 0, h, 1.0)), 0.0)
    return 0.5 * (x * r + log_term)


def _piece_integral(a, u, s0, s1, p):
    """Integral of |a + s u - p| for s in [s0, s1], with unit direction ``u``.

    All arguments may carry a leading batch axis.
    """
    w = np.asarray(p, dtype=float) - np.asarray(a, dtype=float)
    proj = np.sum(w * u, axis=-1)
    perp2 = np.maximum(np.sum(w * w, axis=-1) - proj * proj, 0.0)
    h = np.sqrt(perp2)
    return _antideriv(s1 - proj, h) - _antideriv(s0 - proj, h)


def _segment_breakpoints(a, u, length, cand_pts, p_idx):
    """Walk along the segment, returning [(s_start, s_end, site_local_index), ...].

    ``cand_pts`` holds every site that can be nearest somewhere on the segment;
    ``p_idx`` is the local index of the nearest site at the start.
    """
    # |z(s)-q|^2 - |z(s)-p|^2 = c_q + 2 s (p-q).u  where c_q = |a-q|^2 - |a-p|^2
    diff_a = cand_pts - a
    d2a = np.sum(diff_a * diff_a, axis=1)
    proj = diff_a @ u
    pieces = []
    s = 0.0
    cur = p_idx
    for _ in range(4 * len(cand_pts) + 8):
        # q overtakes cur at s = c / slope when slope > 0
        c = d2a - d2a[cur]
        slope = 2.0 * (proj - proj[cur])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(slope > 0, c / slope, np.inf)
        t[cur] = np.inf
        t[t < s] = np.inf
        nxt = float(np.min(t))
        if not nxt < length:
            pieces.append((s, length, cur))
            return pieces
        hits = np.flatnonzero(t <= nxt * (1 + TIE_RTOL) + 1e-300)
        new = int(hits[np.argmax(slope[hits])])
        if nxt > s:
            pieces.append((s, nxt, cur))
        s = nxt
        cur = new
    raise GeometryError("bisector walk did not terminate")


def _candidates(ps: PointSet, a, b, length, dnn_a, dnn_b):
    radius = max(dnn_a, dnn_b) + length
    mid = 0.5 * (a + b)
    idx = ps.tree.query_ball_point(mid, radius * (1 + 1e-9) + 1e-12)
    return np.sort(np.asarray(idx, dtype=np.intp))


def segment_nn_length(ps: PointSet, a, b) -> float:
    """Exact integral of the nearest-site distance along the segment ``[a, b]``."""
    a = _as_point(a, ps.d)
    b = _as_point(b, ps.d)
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        raise GeometryError("degenerate segment")
    return _segment_nn_length(ps, a, b, length)


def _segment_nn_length(ps, a, b, length):
    u = (b - a) / length
    (ia, ib), (da, db) = ps.nearest(np.vstack([a, b]))
    if ia == ib:
        # Voronoi cells are convex, so one site serves the whole segment
        return float(_piece_integral(a, u, 0.0, length, ps.points[ia]))
    cand = _candidates(ps, a, b, length, da, db)
    cand_pts = ps.points[cand]
    start = int(np.flatnonzero(cand == ia)[0])
    # start with the site that is nearest just after a, not merely at a
    diff_a = cand_pts - a
    d2a = np.sum(diff_a * diff_a, axis=1)
    tied = np.flatnonzero(d2a <= d2a[start] * (1 + 2 * TIE_RTOL) + 1e-300)
    if len(tied) > 1:
        start = int(tied[np.argmax(diff_a[tied] @ u)])
    total = 0.0
    for s0, s1, loc in _segment_breakpoints(a, u, length, cand_pts, start):
        total += float(_piece_integral(a, u, s0, s1, cand_pts[loc]))
    return total


def segments_nn_length(ps: PointSet, A, B, nearest_a=None, nearest_b=None) -> np.ndarray:
    """Exact nearest-neighbor lengths of many segments ``A[k] -> B[k]``.

    Segments whose endpoints share a nearest site are integrated in one
    vectorized pass; the rest go through the exact bisector walk.
    ``nearest_a``/``nearest_b`` may supply precomputed nearest-site indices.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape != B.shape or A.shape[1] != ps.d:
        raise GeometryError("segment endpoint arrays must both be (m, d)")
    vec = B - A
    lengths = np.linalg.norm(vec, axis=1)
    if np.any(lengths == 0):
        raise GeometryError("degenerate segment")
    if nearest_a is None:
        nearest_a = ps.nearest(A)[0]
    if nearest_b is None:
        nearest_b = ps.nearest(B)[0]
    u = vec / lengths[:, None]
    out = np.empty(len(A))
    same = nearest_a == nearest_b
    out[same] = _piece_integral(A[same], u[same], 0.0, lengths[same], ps.points[nearest_a[same]])
    cross = np.flatnonzero(~same)
    if len(cross):
        out[cross] = _crossing_batch(ps, A[cross], u[cross], lengths[cross])
    return out


def _crossing_batch(ps: PointSet, A, U, L, k_max: int = 8):
    """Batched bisector walk for segments whose endpoints have different nearest sites."""
    m = len(A)
    out = np.empty(m)
    k = min(ps.n, k_max)
    mid = A + 0.5 * L[:, None] * U
    dmid, cand = ps.tree.query(mid, k=k)
    cand = cand.reshape(m, k)
    dmid = dmid.reshape(m, k)
    dnn_ends = np.maximum(ps.dnn(A), ps.dnn(A + L[:, None] * U))
    # every site that is nearest somewhere on the segment lies within this radius of the midpoint
    covered = (k == ps.n) | (dmid[:, -1] > (dnn_ends + L) * (1 + 1e-9) + 1e-12)
    for r in np.flatnonzero(~covered):
        out[r] = _segment_nn_length(ps, A[r], A[r] + L[r] * U[r], L[r])
    rows = np.flatnonzero(covered)
    if len(rows) == 0:
        return out
    A, U, L, cand = A[rows], U[rows], L[rows], cand[rows]
    Q = ps.points[cand]                                   # (r, k, d)
    diff = Q - A[:, None, :]
    d2a = np.einsum("rkd,rkd->rk", diff, diff)
    proj = np.einsum("rkd,rd->rk", diff, U)
    ar = np.arange(len(rows))
    # starting site: nearest at a, ties resolved toward the segment direction
    best = d2a.min(axis=1)
    tied = d2a <= best[:, None] * (1 + 2 * TIE_RTOL) + 1e-300
    cur = np.argmax(np.where(tied, proj, -np.inf), axis=1)
    s = np.zeros(len(rows))
    total = np.zeros(len(rows))
    active = np.ones(len(rows), dtype=bool)
    for _ in range(4 * k + 8):
        if not active.any():
            break
        c = d2a - d2a[ar, cur][:, None]
        slope = 2.0 * (proj - proj[ar, cur][:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(slope > 0, c / slope, np.inf)
        t[ar, cur] = np.inf
        t[t < s[:, None]] = np.inf
        nxt = t.min(axis=1)
        end = np.minimum(nxt, L)
        piece = _piece_integral(A, U, s, end, Q[ar, cur])
        total += np.where(active & (end > s), piece, 0.0)
        finished = nxt >= L
        hits = t <= (nxt * (1 + TIE_RTOL) + 1e-300)[:, None]
        new = np.argmax(np.where(hits, slope, -np.inf), axis=1)
        cur = np.where(finished, cur, new)
        s = np.where(finished, s, nxt)
        active &= ~finished
    if active.any():
        raise GeometryError("bisector walk did not terminate")
    out[rows] = total
    return out


def polyline_nn_length(ps: PointSet, path: PolylinePath) -> float:
    """Nearest-neighbor length of a polyline: the sum over its segments."""
    v = path.vertices
    if v.shape[1] != ps.d:
        raise GeometryError("path and point set dimensions differ")
    return float(np.sum(segments_nn_length(ps, v[:-1], v[1:])))


# --- path discretization -------------------------------------------------------


def _bisect(fun, lo, hi, tol=1e-12, maxiter=200):
    """Root of ``fun`` on [lo, hi] given fun(lo) < 0 <= fun(hi)."""
    for _ in range(maxiter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if fun(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _first_crossing(fun, lo, hi, tol, samples=64):
    """Smallest root of ``fun`` on (lo, hi], scanning before bisecting."""
    prev = lo
    for t in np.linspace(lo, hi, samples + 1)[1:]:
        if fun(t) >= 0:
            return _bisect(fun, prev, t, tol)
        prev = t
    return _bisect(fun, prev, hi, tol)


def _check_discretizable(ps: PointSet, path: PolylinePath):
    if path.vertices.shape[1] != ps.d:
        raise GeometryError("path and point set dimensions differ")
    idx, dist = ps.nearest(np.vstack([path.start, path.end]))
    if dist[0] != 0 or dist[1] != 0:
        raise GeometryError("path endpoints must be sites")
    if idx[0] == idx[1]:
        raise GeometryError("path endpoints must be distinct sites")
    scale = 1e-12 * max(1.0, path.length)
    last = path.n_segments - 1
    for k in range(path.n_segments):
        a, b = path.vertices[k], path.vertices[k + 1]
        ab = b - a
        t = np.clip(((ps.points - a) @ ab) / (ab @ ab), 0.0, 1.0)
        dist = np.linalg.norm(a + t[:, None] * ab - ps.points, axis=1)
        touch = dist <= scale
        # the end sites themselves may touch the path only at its ends
        if k == 0:
            touch[idx[0]] &= np.linalg.norm(ab) * t[idx[0]] > scale
        if k == last:
            touch[idx[1]] &= np.linalg.norm(ab) * (1 - t[idx[1]]) > scale
        if np.any(touch):
            raise GeometryError("path touches a site internally")
    return int(idx[0]), int(idx[1])


def _breaking_from(s0, total, dnn, nn, y_idx, tol):
    seq = [s0]
    s = s0
    while nn(s) != y_idx:
        base = dnn(s)
        s = _bisect(lambda t, s=s, base=base: (t - s) - 0.5 * (base + dnn(t)), s, total, tol)
        if s >= total:
            raise GeometryError("breaking sequence did not reach the end site")
        seq.append(s)
    return seq


def discretize_path(ps: PointSet, path: PolylinePath, mode: str = "breaking",
                    param: float | None = None, tol: float = 1e-12, balance: bool = True):
    """Discretize a site-to-site path that avoids all other sites.

    ``mode="breaking"`` returns a proper breaking sequence: each arc between
    consecutive points is as long as the mean nearest-site distance of its
    endpoints, the first point is served by the start site and the last by
    the end site.  The starting offset is chosen so the two ends leave equal
    margins whenever such a choice exists, which makes the sequence of a
    mirror-symmetric instance symmetric.  ``balance=False`` skips that search
    and starts at a fixed offset inside the start site's in-ball.

    ``mode="epsilon_alpha"`` returns ``param``-discretizing points, path ends
    included: every chord between interior points equals ``param`` times the
    nearest-site distance at its first point, and the walk stops once two
    consecutive points are served by the end site.

    Returns a list of ``(arc_length, point)`` pairs.
    """
    x_idx, y_idx = _check_discretizable(ps, path)
    total = path.length
    dnn = lambda s: float(ps.dnn(path.point_at(s))[0])
    nn = lambda s: nearest_site(ps, path.point_at(s))[0]
    r_x = voronoi_inradius(ps, x_idx)
    s_first = min(0.5 * r_x, 0.5 * path.cumlen[1], 0.5 * total)

    if mode == "breaking":
        if param is not None:
            raise GeometryError("breaking mode takes no parameter")
        if balance:
            seq = _balanced_breaking(s_first, total, dnn, nn, x_idx, y_idx, tol)
        else:
            seq = _breaking_from(s_first, total, dnn, nn, y_idx, tol)
        return [(t, path.point_at(t)) for t in seq]

    if mode == "epsilon_alpha":
        if param is None or not 0 < param < 1:
            raise GeometryError("epsilon_alpha mode needs 0 < param < 1")
        out = [(0.0, path.start.copy())]
        s = s_first
        prev_at_y = False
        while True:
            zi = path.point_at(s)
            out.append((s, zi))
            at_y = nn(s) == y_idx
            if at_y and prev_at_y:
                break
            prev_at_y = at_y
            target = param * dnn(s)
            chord = lambda t, zi=zi, target=target: float(np.linalg.norm(path.point_at(t) - zi)) - target
            if chord(total) <= 0:
                break
            s = _first_crossing(chord, s, total, tol)
        out.append((total, path.end.copy()))
        return out

    raise GeometryError(f"unknown discretization mode {mode!r}")


def _cell_exit(s_lo, total, nn, x_idx, tol, samples=64):
    """Arc length where the path first leaves the Voronoi cell of ``x_idx``."""
    prev = s_lo
    for t in np.linspace(s_lo, total, samples + 1)[1:]:
        if nn(t) != x_idx:
            return _bisect(lambda r: 0.0 if nn(r) != x_idx else -1.0, prev, t, tol)
        prev = t
    return total


def _balanced_breaking(s_first, total, dnn, nn, x_idx, y_idx, tol, samples=32):
    """Breaking sequence whose start offset matches the end margin when possible."""
    s_hi = _cell_exit(s_first, total, nn, x_idx, tol)
    while s_hi > 0 and nn(s_hi) != x_idx:
        s_hi -= tol

    def run(s0):
        seq = _breaking_from(s0, total, dnn, nn, y_idx, tol)
        return seq, (total - seq[-1]) - seq[0]

    grid = np.linspace(s_hi / samples, s_hi, samples)
    prev = None
    for s0 in grid[::-1]:
        seq, gap = run(s0)
        if prev is not None and np.sign(gap) != np.sign(prev[1]) and len(seq) == len(prev[2]):
            lo, hi = (s0, prev[0])
            f_lo = gap
            for _ in range(200):
                if hi - lo <= tol:
                    break
                mid = 0.5 * (lo + hi)
                mseq, mgap = run(mid)
                if len(mseq) != len(seq):
                    break
                if np.sign(mgap) == np.sign(f_lo):
                    lo, f_lo = mid, mgap
                else:
                    hi = mid
            cand, _ = run(0.5 * (lo + hi))
            if nn(cand[0]) == x_idx:
                return cand
        prev = (s0, gap, seq)
    return _breaking_from(s_first, total, dnn, nn, y_idx, tol)
