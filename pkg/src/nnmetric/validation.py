"""Invariant suites run by ``nnmetric validate``.

Each check returns a :class:`CheckResult`; failures carry the parameters
needed to reproduce them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from .approx_graph import (ApproxGraphConstants, build_for_delta, default_sample_domain,
                           ptas_nn_distance, validate_approx_graph)
from .edge_squared import SpannerConfig, dense_shortest_distances, euclidean_spanner, squared
from .geometry import PointSet
from .oracle import GridOracle, GridOracleConfig, default_domain
from .single_site import single_site_nn_distance
from .steiner import generate_delta_sample

LEVELS = {
    "quick": {"resolution": 256, "deltas": (0.2,), "probes": 2000, "epsilons": (0.5,),
              "single_site": 2, "ptas_delta": 0.2},
    "full": {"resolution": 512, "deltas": (0.2, 0.1, 0.05), "probes": 10_000, "epsilons": (0.1, 0.5),
             "single_site": 10, "ptas_delta": 0.1},
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3),
                "detail": self.detail, "failures": self.failures[:20]}


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    return wrapper


@_timed
def check_sandwich(ps: PointSet, oracle: GridOracle, rel_tol: float = 0.02) -> CheckResult:
    sq = squareform(pdist(ps.points, "sqeuclidean"))
    fails, worst = [], 0.0
    for i in range(ps.n):
        exact = dense_shortest_distances(sq, i)[0]
        for j in range(i + 1, ps.n):
            v = oracle.query(i, j).estimate
            q = exact[j]
            tol = rel_tol * q / 4
            worst = max(worst, v / (q / 4))
            if not (q / 12 - tol <= v <= q / 4 + tol):
                fails.append({"i": i, "j": j, "oracle": v, "sqdist": q})
    return CheckResult("sandwich", not fails, {"pairs": ps.n * (ps.n - 1) // 2,
                                               "max_oracle_over_upper": worst}, fails)


@_timed
def check_delta_sample(ps: PointSet, deltas, probes: int, seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    domain = default_sample_domain(ps)
    fails, detail = [], {}
    for delta in deltas:
        sample = generate_delta_sample(ps, domain, delta)
        tree = cKDTree(sample.points)
        z = np.empty((0, ps.d))
        while len(z) < probes:
            cand = rng.uniform(domain.lo, domain.hi, size=(2 * probes, ps.d))
            z = np.vstack([z, cand[sample.admissible(ps, cand)]])
        z = z[:probes]
        gap = tree.query(z)[0]
        dnn = ps.dnn(z)
        ratio = gap / dnn
        bad = np.flatnonzero(gap > delta * dnn)
        fails += [{"delta": delta, "probe": z[k].tolist(), "seed": seed} for k in bad[:5]]
        detail[str(delta)] = {"size": len(sample), "max_ratio": float(ratio.max())}
    return CheckResult("delta_sample", not fails, detail, fails)


@_timed
def check_spanner(ps: PointSet, epsilons) -> CheckResult:
    exact_w = squareform(pdist(ps.points, "sqeuclidean"))
    fails, detail = [], {}
    for eps in epsilons:
        cfg = SpannerConfig(eps)
        g = squared(euclidean_spanner(ps, cfg))
        dense = np.full((ps.n, ps.n), np.inf)
        dense[g.u, g.v] = g.w
        dense[g.v, g.u] = g.w
        worst = 1.0
        for i in range(ps.n):
            ex = dense_shortest_distances(exact_w, i)[0]
            sp = dense_shortest_distances(dense, i)[0]
            for j in range(i + 1, ps.n):
                r = sp[j] / ex[j]
                worst = max(worst, r)
                if not (ex[j] * (1 - 1e-12) <= sp[j] <= cfg.squared_stretch * ex[j] * (1 + 1e-12)):
                    fails.append({"epsilon": eps, "i": i, "j": j, "ratio": r})
        detail[str(eps)] = {"edges": g.m, "max_ratio": worst, "bound": cfg.squared_stretch}
    return CheckResult("spanner_stretch", not fails, detail, fails)


@_timed
def check_single_site(count: int, seed: int, resolution: int = 512, rel_tol: float = 0.01) -> CheckResult:
    """Grid oracle against the closed form for random single-site configurations."""
    rng = np.random.default_rng(seed)
    fails, worst = [], 0.0
    p = np.zeros(2)
    ps = PointSet(p[None])
    anchors = []
    for _ in range(count):
        r1, r2 = rng.uniform(0.5, 1.5, size=2)
        phi, theta = rng.uniform(0, 2 * np.pi), rng.uniform(0.1, np.pi)
        anchors.append(r1 * np.array([np.cos(phi), np.sin(phi)]))
        anchors.append(r2 * np.array([np.cos(phi + theta), np.sin(phi + theta)]))
    anchors = np.array(anchors)
    oracle = GridOracle(ps, GridOracleConfig(resolution, domain=default_domain(np.vstack([p, anchors]))),
                        anchors=anchors)
    for k in range(count):
        x, y = anchors[2 * k], anchors[2 * k + 1]
        exact = single_site_nn_distance(p, x, y)
        v = oracle.anchor_query(2 * k, 2 * k + 1).estimate
        err = abs(v - exact) / exact
        worst = max(worst, err)
        if err > rel_tol:
            fails.append({"x": x.tolist(), "y": y.tolist(), "oracle": v, "closed_form": exact})
    return CheckResult("single_site", not fails, {"configurations": count, "max_rel_error": worst}, fails)


@_timed
def check_approx_graph(ps: PointSet, delta: float, oracle: GridOracle, pairs,
                       constants: ApproxGraphConstants = ApproxGraphConstants(),
                       inject_fault: bool = False) -> CheckResult:
    g = build_for_delta(ps, delta, constants)
    if inject_fault:
        w = g.graph.w.copy()
        w[0] *= 1.5
        object.__setattr__(g, "graph", g.graph.with_weights(w))
    problems = validate_approx_graph(g)
    fails = [{"edge_soundness": p} for p in problems]
    detail = {"delta": delta, "steiner_points": g.n_steiner, "edges": g.graph.m}
    if not problems:
        for i, j in pairs:
            r = ptas_nn_distance(g, i, j)
            v = oracle.query(i, j).estimate
            if not (r.certified_lower <= v <= r.certified_upper):
                fails.append({"i": i, "j": j, "ptas": r.estimate, "oracle": v, "delta": delta})
    return CheckResult("approx_graph", not fails, detail, fails)


@_timed
def check_convergence(ps: PointSet, oracle: GridOracle, pairs, deltas=(0.2, 0.1, 0.05),
                      noise: float = 0.01, final: float = 0.05) -> CheckResult:
    errs = []
    truth = np.array([oracle.query(i, j).estimate for i, j in pairs])
    for delta in deltas:
        g = build_for_delta(ps, delta)
        est = np.array([ptas_nn_distance(g, i, j).estimate for i, j in pairs])
        errs.append(float(np.max(np.abs(est - truth) / truth)))
    monotone = all(b <= a + noise for a, b in zip(errs, errs[1:]))
    ok = monotone and errs[-1] <= final
    return CheckResult("ptas_convergence", ok, {"deltas": list(deltas), "max_rel_error": errs},
                       [] if ok else [{"errors": errs}])


def run_suite(ps: PointSet, level: str = "quick", seed: int = 0, inject_fault: bool = False) -> list[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"unknown validation level {level!r}")
    cfg = LEVELS[level]
    oracle = GridOracle(ps, GridOracleConfig(cfg["resolution"]))
    pairs = list(combinations(range(ps.n), 2))
    rng = np.random.default_rng(seed)
    sub = [pairs[k] for k in sorted(rng.choice(len(pairs), size=min(5, len(pairs)), replace=False))]
    results = [
        check_sandwich(ps, oracle),
        check_delta_sample(ps, cfg["deltas"], cfg["probes"], seed),
        check_spanner(ps, cfg["epsilons"]),
        check_approx_graph(ps, cfg["ptas_delta"], oracle, sub, inject_fault=inject_fault),
    ]
    del oracle
    results.append(check_single_site(cfg["single_site"], seed))
    if level == "full":
        oracle = GridOracle(ps, GridOracleConfig(cfg["resolution"]))
        results.append(check_convergence(ps, oracle, sub))
    return results
