"""Minimal SVG figures of planar sites, Steiner points and witness paths."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import BoundingBox


def _num(x: float) -> str:
    return f"{x:.6g}"


class SvgCanvas:
    """Accumulates elements in world coordinates; y points up in the output."""

    def __init__(self, domain: BoundingBox, width: int = 600):
        if domain.dim != 2:
            raise ValueError("SVG export needs planar (d = 2) data")
        self.domain = domain
        w, h = domain.widths
        self.scale = width / w
        self.width = width
        self.height = max(1, int(round(h * self.scale)))
        self.parts: list[str] = []

    def to_px(self, pt) -> tuple[float, float]:
        x = (pt[0] - self.domain.lo[0]) * self.scale
        y = (self.domain.hi[1] - pt[1]) * self.scale
        return x, y

    def circle(self, pt, r: float, fill: str, cls: str):
        x, y = self.to_px(pt)
        self.parts.append(f'<circle class="{cls}" cx="{_num(x)}" cy="{_num(y)}" r="{_num(r)}" fill="{fill}"/>')

    def line(self, a, b, stroke: str, cls: str, width: float = 1.5):
        (x1, y1), (x2, y2) = self.to_px(a), self.to_px(b)
        self.parts.append(f'<line class="{cls}" x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" '
                          f'y2="{_num(y2)}" stroke="{stroke}" stroke-width="{_num(width)}"/>')

    def text(self, pt, label: str, cls: str = "label"):
        x, y = self.to_px(pt)
        self.parts.append(f'<text class="{cls}" x="{_num(x + 4)}" y="{_num(y - 4)}" '
                          f'font-size="10">{label}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        bg = f'<rect width="{self.width}" height="{self.height}" fill="white"/>'
        return "\n".join([head, bg, *self.parts, "</svg>"]) + "\n"


def render_paths(sites, polylines=(), steiner=None, domain: BoundingBox | None = None,
                 width: int = 600, labels: bool = True) -> str:
    """SVG text with Steiner points (grey), witness polylines (one line per segment) and sites."""
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    polylines = [np.atleast_2d(np.asarray(p, dtype=float)) for p in polylines]
    if sites.shape[1] != 2:
        raise ValueError("SVG export needs planar (d = 2) data")
    if domain is None:
        allpts = np.vstack([sites, *polylines]) if polylines else sites
        span = float(np.ptp(allpts, axis=0).max()) or 1.0
        domain = BoundingBox.around(allpts, 0.1 * span)
    canvas = SvgCanvas(domain, width)
    if steiner is not None:
        for s in np.atleast_2d(steiner):
            canvas.circle(s, 0.8, "#bbbbbb", "steiner")
    colors = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"]
    for k, poly in enumerate(polylines):
        for a, b in zip(poly[:-1], poly[1:]):
            canvas.line(a, b, colors[k % len(colors)], "witness")
    for k, p in enumerate(sites):
        canvas.circle(p, 3.0, "black", "site")
        if labels:
            canvas.text(p, str(k))
    return canvas.render()


def write_svg(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path
