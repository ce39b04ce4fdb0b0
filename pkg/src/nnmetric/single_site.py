"""Exact nearest-neighbor geodesics when both endpoints share one nearest site.

With a single site at the origin of the plane through ``x``, ``y`` and the
site, the map ``z -> z**2 / 2`` onto the two-fold cover of the plane turns
nearest-neighbor length into ordinary Euclidean length.  Geodesics are then
straight chords on the cover, or the two radial segments through the site
once the chord would wrap past the origin (angle at the site >= pi/2).
"""
from __future__ import annotations

import numpy as np

from .geometry import GeometryError, PointSet, PolylinePath, nearest_site


def _unsigned_angle(u: np.ndarray, v: np.ndarray) -> float:
    # numerically stable in every dimension
    nu = u / np.linalg.norm(u)
    nv = v / np.linalg.norm(v)
    return 2.0 * float(np.arctan2(np.linalg.norm(nu - nv), np.linalg.norm(nu + nv)))


def _prepare(p, x, y, ps: PointSet | None):
    p = np.asarray(p, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if not (p.shape == x.shape == y.shape):
        raise GeometryError("site and endpoints must share a dimension")
    if ps is not None:
        for z in (x, y):
            _, dist = nearest_site(ps, z)
            if np.linalg.norm(z - p) > dist * (1 + 1e-12) + 1e-15:
                raise GeometryError("the given site is not the nearest site of both endpoints")
    return p, x, y


def single_site_nn_distance(p, x, y, ps: PointSet | None = None) -> float:
    """Nearest-neighbor distance from ``x`` to ``y`` when ``p`` is nearest to both.

    If ``ps`` is given, the nearest-site precondition is checked against it.
    """
    p, x, y = _prepare(p, x, y, ps)
    r1 = float(np.linalg.norm(x - p))
    r2 = float(np.linalg.norm(y - p))
    if r1 == 0.0 or r2 == 0.0:
        return 0.5 * (r1 * r1 + r2 * r2)
    theta = _unsigned_angle(x - p, y - p)
    if theta >= 0.5 * np.pi:
        return 0.5 * (r1 * r1 + r2 * r2)
    return _chord(r1, r2, theta)


def _chord(r1: float, r2: float, theta: float) -> float:
    # |r1^2/2 - r2^2/2 e^{2i theta}|, written to avoid cancellation when x ~ y
    a, b = r1 * r1, r2 * r2
    sin_t = np.sin(theta)
    return 0.5 * float(np.sqrt((a - b) ** 2 + 4.0 * a * b * sin_t * sin_t))


def single_site_nn_distances(p, X, Y) -> np.ndarray:
    """Vectorized :func:`single_site_nn_distance` for rows of ``X`` and ``Y``."""
    p = np.asarray(p, dtype=float)
    U = np.atleast_2d(X) - p
    V = np.atleast_2d(Y) - p
    r1 = np.linalg.norm(U, axis=-1)
    r2 = np.linalg.norm(V, axis=-1)
    through = 0.5 * (r1 * r1 + r2 * r2)
    ok = (r1 > 0) & (r2 > 0)
    out = through.copy()
    if np.any(ok):
        nu = U[ok] / r1[ok, None]
        nv = V[ok] / r2[ok, None]
        theta = 2.0 * np.arctan2(np.linalg.norm(nu - nv, axis=-1), np.linalg.norm(nu + nv, axis=-1))
        a, b = r1[ok] ** 2, r2[ok] ** 2
        chord = 0.5 * np.sqrt((a - b) ** 2 + 4.0 * a * b * np.sin(theta) ** 2)
        out[ok] = np.where(theta >= 0.5 * np.pi, through[ok], chord)
    return out


def site_to_point_nn_distance(p, s) -> float:
    """Nearest-neighbor distance from a site to a point of its own cell: ``|ps|^2 / 2``."""
    p = np.asarray(p, dtype=float)
    s = np.asarray(s, dtype=float)
    if p.shape != s.shape:
        raise GeometryError("site and point must share a dimension")
    r = float(np.linalg.norm(s - p))
    return 0.5 * r * r


def single_site_geodesic_path(p, x, y, segments: int = 64) -> PolylinePath:
    """Polyline sampling of the single-site geodesic from ``x`` to ``y``.

    Wide angles give the exact two-segment path through ``p``; otherwise the
    curved geodesic is sampled at ``segments + 1`` points, all of them in the
    plane of ``x``, ``y`` and ``p``.
    """
    if segments < 1:
        raise ValueError("segments must be >= 1")
    p, x, y = _prepare(p, x, y, None)
    u, v = x - p, y - p
    r1, r2 = np.linalg.norm(u), np.linalg.norm(v)
    if r1 == 0.0 or r2 == 0.0 or _unsigned_angle(u, v) >= 0.5 * np.pi:
        return PolylinePath.from_points(np.vstack([x, p, y]))
    e1 = u / r1
    w = v - (v @ e1) * e1
    nw = np.linalg.norm(w)
    if nw <= 1e-15 * r2:
        e2 = np.zeros_like(e1)
    else:
        e2 = w / nw
    zx = complex(r1, 0.0)
    zy = complex(v @ e1, v @ e2)
    t = np.linspace(0.0, 1.0, segments + 1)
    wt = (1 - t) * (zx * zx / 2) + t * (zy * zy / 2)
    # chord stays in the upper half plane of the cover, so the principal root is the right branch
    z = np.sqrt(2 * wt)
    pts = p + np.outer(z.real, e1) + np.outer(z.imag, e2)
    pts[0], pts[-1] = x, y
    return PolylinePath.from_points(pts)
