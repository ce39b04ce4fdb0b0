"""δ-samples of a box minus shrunken Voronoi in-balls, by quadtree refinement.

A δ-sample ``S`` of a region ``D`` puts a sample within ``δ * dnn(z)`` of
every ``z`` in ``D``.  Here ``D`` is the domain box minus the open balls
``B(p_i, u_i)`` with ``u_i = (1 - δ^(2/3)) r_i`` and ``r_i`` the Voronoi
inradius of site ``p_i``.

Refinement is level by level (2^d children per cell, fixed child order) so
the output is deterministic.  With ``L(c)`` a lower bound on ``dnn`` over the
admissible part of a cell ``c`` of diameter ``diam``:

* a cell whose center is admissible stops once ``diam <= 2 δ L(c)`` and
  emits its center, which is within ``diam / 2`` of every point of the cell;
* a cell whose center lies in an excluded ball stops once ``diam <= δ L(c)``
  and emits the admissible point closest to the center (its radial
  projection onto the ball), which is within ``diam`` of every admissible
  point of the cell;
* cells with no admissible point are dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .geometry import BoundingBox, GeometryError, PointSet, voronoi_inradii
from .io import read_points_csv, write_points_csv

MAX_DEPTH = 40
MAX_POINTS = 5_000_000


def compute_exclusion_radii(ps: PointSet, delta: float) -> np.ndarray:
    """Radii ``u_i = (1 - δ^(2/3)) r_i`` of the balls left unsampled around each site."""
    _check_delta(delta)
    if ps.n < 2:
        raise GeometryError("exclusion radii need at least two sites")
    return (1.0 - delta ** (2.0 / 3.0)) * voronoi_inradii(ps)


def _check_delta(delta: float):
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class DeltaSample:
    delta: float
    domain: BoundingBox
    exclusion_radii: np.ndarray
    points: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def admissible(self, ps: PointSet, zs) -> np.ndarray:
        """Mask of query points inside the domain and outside every excluded ball."""
        zs = np.atleast_2d(zs)
        idx, dist = ps.nearest(zs)
        return self.domain.contains(zs) & (dist >= self.exclusion_radii[idx])


def generate_delta_sample(ps: PointSet, domain: BoundingBox, delta: float) -> DeltaSample:
    """Quadtree δ-sample of ``domain`` minus the shrunken in-balls of ``ps``."""
    _check_delta(delta)
    if domain.dim != ps.d:
        raise GeometryError("domain dimension differs from the point set")
    if not np.all(domain.contains(ps.points)):
        raise GeometryError("domain must contain every site")
    if np.any(domain.widths <= 0):
        raise GeometryError("domain is degenerate")
    u = compute_exclusion_radii(ps, delta)
    u_min = float(u.min())
    d = ps.d
    children = np.array(np.meshgrid(*[[-1, 1]] * d, indexing="ij")).reshape(d, -1).T * 0.5

    centers = (0.5 * (domain.lo + domain.hi))[None, :]
    width = domain.widths.copy()
    emitted = []
    n_leaves = 0
    n_projected = 0
    depth = 0
    while len(centers):
        if depth > MAX_DEPTH:
            raise GeometryError("refinement exceeded the depth limit; domain too small or delta too fine")
        diam = float(np.linalg.norm(width))
        near, dist = ps.nearest(centers)
        u_near = u[near]
        # no admissible point when the cell sits inside its nearest site's excluded ball
        inside = dist + 0.5 * diam <= u_near
        lower = np.maximum(dist - 0.5 * diam, u_min)
        admissible = dist >= u_near

        leaf_c = admissible & ~inside & (diam <= 2.0 * delta * lower)
        emitted.append(centers[leaf_c])
        n_leaves += int(leaf_c.sum())

        proj_cand = ~admissible & ~inside
        split = ~inside & ~leaf_c
        if proj_cand.any():
            c = centers[proj_cand]
            p = ps.points[near[proj_cand]]
            off = c - p
            norm = np.linalg.norm(off, axis=1)
            direction = np.where(norm[:, None] > 0, off / np.where(norm > 0, norm, 1.0)[:, None],
                                 np.eye(d)[0])
            q = p + u_near[proj_cand, None] * direction
            gap = u_near[proj_cand] - norm
            empty = gap > 0.5 * diam
            ok = ~empty & (diam <= delta * lower[proj_cand]) & domain.contains(q)
            emitted.append(q[ok])
            n_leaves += int(ok.sum())
            n_projected += int(ok.sum())
            rows = np.flatnonzero(proj_cand)
            split[rows[empty | ok]] = False

        parents = centers[split]
        if n_leaves + len(parents) * 2 ** d > MAX_POINTS:
            raise MemoryError(f"delta-sample would exceed the limit of {MAX_POINTS} points")
        width = 0.5 * width
        centers = (parents[:, None, :] + children[None, :, :] * width).reshape(-1, d)
        depth += 1

    pts = np.vstack(emitted) if emitted else np.empty((0, d))
    stats = {"leaf_count": n_leaves, "projected": n_projected, "max_depth": depth - 1,
             "n": ps.n, "spread": spread(ps)}
    return DeltaSample(delta, domain, u, pts, stats)


def spread(ps: PointSet) -> float:
    """Ratio of the largest to the smallest pairwise site distance."""
    if ps.n < 2:
        raise GeometryError("spread needs at least two sites")
    dist = pdist(ps.points)
    return float(dist.max() / dist.min())


def sample_size_report(sample: DeltaSample) -> dict:
    """Sample size against the ``n log(spread)`` scale of the size bound.

    With spread 1 the ratio is undefined and reported as ``None``; ``size``
    still carries the raw count.
    """
    n, sp = sample.stats["n"], sample.stats["spread"]
    log_sp = math.log(sp)
    return {
        **sample.stats,
        "size": len(sample),
        "delta": sample.delta,
        "ratio": len(sample) / (n * log_sp) if log_sp > 0 else None,
    }


# --- serialization -------------------------------------------------------------


def _fmt(values) -> str:
    return ",".join(repr(float(v)) for v in np.atleast_1d(values))


def write_delta_sample(sample: DeltaSample, csv_path) -> Path:
    """Write the points as CSV and the metadata to ``<csv_path>.meta``; returns the meta path."""
    csv_path = Path(csv_path)
    write_points_csv(csv_path, sample.points)
    meta = csv_path.with_name(csv_path.name + ".meta")
    lines = [
        f"delta={sample.delta!r}",
        f"domain_lo={_fmt(sample.domain.lo)}",
        f"domain_hi={_fmt(sample.domain.hi)}",
        f"exclusion_radii={_fmt(sample.exclusion_radii)}",
    ]
    lines += [f"{k}={v!r}" for k, v in sorted(sample.stats.items())]
    meta.write_text("\n".join(lines) + "\n")
    return meta


def read_delta_sample(csv_path) -> DeltaSample:
    csv_path = Path(csv_path)
    meta = {}
    for line in csv_path.with_name(csv_path.name + ".meta").read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    floats = lambda key: np.array([float(x) for x in meta[key].split(",") if x])
    domain = BoundingBox(floats("domain_lo"), floats("domain_hi"))
    pts = read_points_csv(csv_path) if csv_path.stat().st_size else np.empty((0, domain.dim))
    stats = {k: int(meta[k]) for k in ("leaf_count", "projected", "max_depth", "n") if k in meta}
    if "spread" in meta:
        stats["spread"] = float(meta["spread"])
    return DeltaSample(float(meta["delta"]), domain, floats("exclusion_radii"),
                       pts.reshape(-1, domain.dim), stats)
