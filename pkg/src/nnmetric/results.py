"""Result record shared by every distance algorithm."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA = "nnmetric-v1"


@dataclass
class DistanceResult:
    """An estimate of the nearest-neighbor (or edge-squared) distance of a site pair.

    ``certified_lower <= estimate <= certified_upper`` always holds.  ``witness``
    lists vertex indices of the graph the algorithm searched (sites are
    indexed as in the input for every algorithm); ``witness_points`` is the
    corresponding polyline in space when the algorithm can produce one.
    """

    i: int
    j: int
    algorithm: str
    estimate: float
    certified_lower: float
    certified_upper: float
    witness: list[int] = field(default_factory=list)
    witness_points: np.ndarray | None = None
    runtime_ms: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lo, est, hi = self.certified_lower, self.estimate, self.certified_upper
        slack = 1e-12 * max(1.0, abs(est))
        if not (lo <= est + slack and est <= hi + slack):
            raise ValueError(f"bounds out of order: {lo} <= {est} <= {hi}")

    @property
    def ratio(self) -> float:
        if self.certified_lower <= 0:
            return float("inf")
        return self.certified_upper / self.certified_lower

    def to_dict(self, witness: bool = False) -> dict[str, Any]:
        out = {
            "i": int(self.i),
            "j": int(self.j),
            "algorithm": self.algorithm,
            "estimate": float(self.estimate),
            "lower": float(self.certified_lower),
            "upper": _json_float(self.certified_upper),
            "runtime_ms": round(float(self.runtime_ms), 3),
        }
        out.update({k: _jsonable(v) for k, v in self.extra.items()})
        if witness:
            out["witness"] = [int(k) for k in self.witness]
            if self.witness_points is not None:
                out["witness_points"] = np.asarray(self.witness_points).tolist()
        return out


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v
