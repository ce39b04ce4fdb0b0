"""Seeded synthetic point clouds."""
from __future__ import annotations

import numpy as np

KINDS = ("uniform", "clusters", "star", "collinear")


def generate_points(kind: str, n: int, d: int = 2, seed: int = 0) -> np.ndarray:
    """Return an ``(n, d)`` array of distinct points.

    ``uniform`` fills the unit cube, ``clusters`` makes two blobs of diameter
    at most 1 whose gap is at least 2, ``star`` places a hub with three arms of
    evenly spaced points (in the first two coordinates) and ``collinear`` puts
    the points at ``0, 1, ..., n-1`` on the first axis.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown generator {kind!r}; choose from {', '.join(KINDS)}")
    if n < 2:
        raise ValueError("need at least two points")
    if d < 1 or (kind == "star" and d < 2):
        raise ValueError(f"dimension {d} is too small for {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return rng.random((n, d))
    if kind == "clusters":
        half = n // 2
        blob = (rng.random((n, d)) - 0.5) / np.sqrt(d)
        blob[half:, 0] += 3.0
        return blob
    if kind == "collinear":
        pts = np.zeros((n, d))
        pts[:, 0] = np.arange(n)
        return pts
    # star: hub plus arms filled round-robin, outermost point at distance 1
    arms = 3
    counts = [(n - 1) // arms + (k < (n - 1) % arms) for k in range(arms)]
    pts = [np.zeros(d)]
    for k, c in enumerate(counts):
        direction = np.zeros(d)
        direction[:2] = np.cos(2 * np.pi * k / arms), np.sin(2 * np.pi * k / arms)
        pts += [direction * (m + 1) / c for m in range(c)]
    return np.array(pts)
