"""Undirected weighted graphs, Dijkstra queries and the edge-list text format."""
from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra as _scipy_dijkstra

GRAPH_MAGIC = "nnmetric-graph"
GRAPH_VERSION = "v1"


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on ``n`` vertices stored as an edge list.

    Each edge appears once in ``(u, v, w)``; adjacency in both directions is
    derived lazily.  ``types`` optionally tags each edge with a small integer.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    types: np.ndarray | None = None
    _adj: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.intp).reshape(-1)
        v = np.asarray(self.v, dtype=np.intp).reshape(-1)
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if not (len(u) == len(v) == len(w)):
            raise GraphError("edge arrays differ in length")
        if len(u) and (u.min() < 0 or v.min() < 0 or u.max() >= self.n or v.max() >= self.n):
            raise GraphError("edge endpoint out of range")
        if np.any(u == v):
            raise GraphError("self-loops are not allowed")
        if np.any(~(w >= 0)):
            raise GraphError("edge weights must be nonnegative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)
        if self.types is not None:
            t = np.asarray(self.types, dtype=np.int8).reshape(-1)
            if len(t) != len(u):
                raise GraphError("edge type array has the wrong length")
            object.__setattr__(self, "types", t)

    @classmethod
    def from_edges(cls, n: int, edges, types=None) -> "WeightedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0), types)
        u, v, w = zip(*edges)
        return cls(n, np.array(u), np.array(v), np.array(w, dtype=float), types)

    @property
    def m(self) -> int:
        return len(self.u)

    def _csr_arrays(self):
        if "csr" not in self._adj:
            src = np.concatenate([self.u, self.v])
            dst = np.concatenate([self.v, self.u])
            wt = np.concatenate([self.w, self.w])
            eid = np.concatenate([np.arange(self.m), np.arange(self.m)])
            order = np.lexsort((dst, src))
            indptr = np.zeros(self.n + 1, dtype=np.intp)
            np.add.at(indptr, src + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._adj["csr"] = (indptr, dst[order], wt[order], eid[order])
        return self._adj["csr"]

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices of ``i`` and the matching edge weights."""
        indptr, nbr, wt, _ = self._csr_arrays()
        lo, hi = indptr[i], indptr[i + 1]
        return nbr[lo:hi], wt[lo:hi]

    def edge_between(self, a: int, b: int) -> int:
        """Index of the lightest edge joining ``a`` and ``b`` (-1 if none)."""
        indptr, nbr, wt, eid = self._csr_arrays()
        lo, hi = indptr[a], indptr[a + 1]
        hit = np.flatnonzero(nbr[lo:hi] == b)
        if len(hit) == 0:
            return -1
        return int(eid[lo + hit[np.argmin(wt[lo + hit])]])

    def to_csr(self) -> csr_matrix:
        """Upper-triangular sparse matrix for undirected searches.

        Parallel edges collapse to the lightest one.
        """
        if "matrix" not in self._adj:
            # zero weights would vanish from a sparse matrix
            w = np.maximum(self.w, np.finfo(float).tiny)
            lo = np.minimum(self.u, self.v)
            hi = np.maximum(self.u, self.v)
            mat = coo_matrix((w, (lo, hi)), shape=(self.n, self.n)).tocsr()
            if mat.nnz != self.m:
                order = np.argsort(-w, kind="stable")
                key = (lo * self.n + hi)[order]
                _, first = np.unique(key[::-1], return_index=True)
                pick = order[len(key) - 1 - first]
                mat = coo_matrix((w[pick], (lo[pick], hi[pick])), shape=(self.n, self.n)).tocsr()
            self._adj["matrix"] = mat
        return self._adj["matrix"]

    def with_weights(self, w, types=None) -> "WeightedGraph":
        return WeightedGraph(self.n, self.u, self.v, w, self.types if types is None else types)

    def path_weight(self, path) -> float:
        total = 0.0
        for a, b in zip(path[:-1], path[1:]):
            e = self.edge_between(a, b)
            if e < 0:
                raise GraphError(f"no edge between {a} and {b}")
            total += self.w[e]
        return total


def _check_vertex(g: WeightedGraph, i) -> int:
    if not isinstance(i, (int, np.integer)) or not 0 <= i < g.n:
        raise GraphError(f"invalid vertex index {i!r}")
    return int(i)


HEAP_EDGE_LIMIT = 200_000


def shortest_path(g: WeightedGraph, s: int, t: int) -> tuple[float, list[int]]:
    """Exact shortest ``s``-``t`` distance and one witness path.

    Dijkstra with a binary heap that stops as soon as ``t`` is settled; large
    graphs go through the compiled single-source search instead.
    Unreachable targets give ``(inf, [])``.
    """
    s = _check_vertex(g, s)
    t = _check_vertex(g, t)
    if s == t:
        return 0.0, [s]
    if g.m > HEAP_EDGE_LIMIT:
        dist, pred = shortest_path_tree(g, [s])
        if not np.isfinite(dist[0, t]):
            return math.inf, []
        path = path_from_predecessors(pred[0], s, t)
        return g.path_weight(path), path
    indptr, nbr, wt, _ = g._csr_arrays()
    dist = {s: 0.0}
    prev = {s: -1}
    done = set()
    heap = [(0.0, s)]
    while heap:
        d, a = heapq.heappop(heap)
        if a in done:
            continue
        if a == t:
            path = [t]
            while prev[path[-1]] >= 0:
                path.append(prev[path[-1]])
            return d, path[::-1]
        done.add(a)
        lo, hi = indptr[a], indptr[a + 1]
        for b, wb in zip(nbr[lo:hi].tolist(), wt[lo:hi].tolist()):
            nd = d + wb
            if nd < dist.get(b, math.inf):
                dist[b] = nd
                prev[b] = a
                heapq.heappush(heap, (nd, b))
    return math.inf, []


def shortest_path_tree(g: WeightedGraph, sources) -> tuple[np.ndarray, np.ndarray]:
    """Distances and predecessor arrays from each source (bulk queries)."""
    sources = np.atleast_1d(np.asarray(sources, dtype=np.intp))
    dist, pred = _scipy_dijkstra(g.to_csr(), directed=False, indices=sources,
                                 return_predecessors=True)
    return np.atleast_2d(dist), np.atleast_2d(pred)


def path_from_predecessors(pred_row: np.ndarray, s: int, t: int) -> list[int]:
    if s == t:
        return [s]
    if pred_row[t] < 0:
        return []
    path = [t]
    while path[-1] != s:
        path.append(int(pred_row[path[-1]]))
    return path[::-1]


# --- serialization -------------------------------------------------------------


def write_graph(g: WeightedGraph, dest, with_types: bool | None = None) -> None:
    """Write the edge list as ``u v w`` (or ``u v w t``) lines after a header."""
    if with_types is None:
        with_types = g.types is not None
    if with_types and g.types is None:
        raise GraphError("graph has no edge types to write")
    buf = io.StringIO()
    buf.write(f"{GRAPH_MAGIC} {GRAPH_VERSION} {g.n} {g.m}\n")
    for k in range(g.m):
        line = f"{g.u[k]} {g.v[k]} {float(g.w[k])!r}"
        if with_types:
            line += f" {int(g.types[k])}"
        buf.write(line + "\n")
    _write_text(dest, buf.getvalue())


def read_graph(src) -> WeightedGraph:
    text = _read_text(src)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GraphError("empty graph file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != GRAPH_MAGIC or head[1] != GRAPH_VERSION:
        raise GraphError(f"bad graph header: {lines[0]!r}")
    n, m = int(head[2]), int(head[3])
    if len(lines) - 1 != m:
        raise GraphError(f"header announces {m} edges, found {len(lines) - 1}")
    rows = [ln.split() for ln in lines[1:]]
    widths = {len(r) for r in rows}
    if m and widths not in ({3}, {4}):
        raise GraphError("edge lines must all have 3 or all have 4 fields")
    u = np.array([int(r[0]) for r in rows], dtype=np.intp)
    v = np.array([int(r[1]) for r in rows], dtype=np.intp)
    w = np.array([float(r[2]) for r in rows])
    types = np.array([int(r[3]) for r in rows]) if m and widths == {4} else None
    return WeightedGraph(n, u, v, w, types)


def _write_text(dest, text: str) -> None:
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def _read_text(src) -> str:
    if hasattr(src, "read"):
        return src.read()
    return Path(src).read_text()
