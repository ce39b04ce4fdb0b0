"""Point-cloud CSV files: one point per row, optional header line."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_points_csv(path) -> np.ndarray:
    """Read an ``(n, d)`` array; a first row that is not all numbers is taken as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing column counts {sorted(widths)}")
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None


def write_points_csv(path, points, header: list[str] | None = None) -> None:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in points:
            w.writerow([repr(float(c)) for c in row])


def default_header(d: int) -> list[str]:
    return [f"x{k}" for k in range(d)]


def ensure_parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
