"""Command-line entry point: ``nnmetric {gen,dist,validate,export-path}``.

Exit codes: 0 success, 1 usage or input error, 2 validation failure,
3 internal error (including resource limits).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

from . import __version__
from .approx_graph import ApproxGraphConstants, build_for_delta, epsilon_to_delta, ptas_nn_distance
from .edge_squared import SpannerConfig, approx3_nn_distance, euclidean_spanner, sqdist
from .generators import KINDS, generate_points
from .geometry import GeometryError, PointSet
from .graph import write_graph
from .io import default_header, ensure_parent, read_points_csv, write_points_csv
from .oracle import GridOracle, GridOracleConfig, default_domain
from .results import SCHEMA
from .steiner import write_delta_sample
from .svg import render_paths, write_svg
from .validation import run_suite

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INTERNAL = 0, 1, 2, 3
ALGORITHMS = ("approx3", "ptas", "oracle", "sqdist")
DEFAULT_PTAS_DELTA = 0.1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nnmetric", description="Nearest-neighbor metric on point clouds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a synthetic point cloud as CSV")
    gen.add_argument("kind", choices=KINDS)
    gen.add_argument("-n", "--n", type=int, required=True)
    gen.add_argument("-d", "--d", type=int, default=2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    dist = sub.add_parser("dist", help="distances between site pairs")
    dist.add_argument("--input", required=True)
    dist.add_argument("--algorithm", choices=ALGORITHMS, default="approx3")
    dist.add_argument("--epsilon", type=float, help="spanner epsilon (approx3) or target error (ptas)")
    dist.add_argument("--delta", type=float, help="sampling density for ptas (overrides --epsilon)")
    dist.add_argument("--resolution", type=int, default=512, help="oracle grid cells per axis")
    group = dist.add_mutually_exclusive_group(required=True)
    group.add_argument("--pairs", nargs="+", metavar="I,J")
    group.add_argument("--all-pairs", action="store_true")
    dist.add_argument("--seed", type=int, default=0)
    dist.add_argument("--out", help="JSON output path (default: stdout)")
    dist.add_argument("--c2", type=float, default=ApproxGraphConstants.c2)
    dist.add_argument("--c4", type=float, default=ApproxGraphConstants.c4)
    dist.add_argument("--witness", action="store_true", help="include witness paths")
    dist.add_argument("--sample-out", help="ptas: write the Steiner points as CSV")
    dist.add_argument("--graph-out", help="ptas: write the approximation graph edge list")

    val = sub.add_parser("validate", help="run the invariant suites")
    val.add_argument("--input", help="point CSV (default: 10 uniform points from --seed)")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--level", choices=("quick", "full"), default="quick")
    val.add_argument("--out", help="JSON report path (default: stdout)")
    val.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    exp = sub.add_parser("export-path", help="draw witness paths of a dist result as SVG")
    exp.add_argument("--input", required=True)
    exp.add_argument("--result", required=True, help="JSON written by 'dist --witness'")
    exp.add_argument("--pairs", nargs="+", metavar="I,J", help="subset of result pairs to draw")
    exp.add_argument("--steiner", help="Steiner point CSV to draw underneath")
    exp.add_argument("--out", required=True)
    return parser


def _parse_pairs(tokens, n: int) -> list[tuple[int, int]]:
    pairs = []
    for tok in tokens:
        try:
            i, j = (int(x) for x in tok.split(","))
        except ValueError:
            raise UsageError(f"bad pair {tok!r}; expected I,J") from None
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise UsageError(f"pair {tok!r} must name two distinct sites in [0, {n})")
        pairs.append((min(i, j), max(i, j)))
    return sorted(set(pairs))


def _threads() -> int:
    raw = os.environ.get("NNMETRIC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"NNMETRIC_THREADS must be an integer, got {raw!r}") from None


def _emit(payload: dict, out) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if out:
        ensure_parent(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    pts = generate_points(args.kind, args.n, args.d, args.seed)
    write_points_csv(ensure_parent(args.out), pts, default_header(args.d))
    return EXIT_OK


def _query_fn(args, ps: PointSet):
    """Single-pair query function plus the parameters echoed in the output."""
    if args.algorithm == "sqdist":
        return (lambda i, j: sqdist(ps, i, j, "exact")), {}
    if args.algorithm == "approx3":
        cfg = SpannerConfig(args.epsilon if args.epsilon is not None else 0.1)
        spanner = euclidean_spanner(ps, cfg)
        return (lambda i, j: approx3_nn_distance(ps, i, j, cfg, spanner)), {"epsilon": cfg.epsilon}
    if args.algorithm == "oracle":
        oracle = GridOracle(ps, GridOracleConfig(args.resolution))
        return oracle.query, {"resolution": args.resolution}
    constants = ApproxGraphConstants(args.c2, args.c4)
    if args.delta is not None:
        delta = args.delta
    elif args.epsilon is not None:
        delta = epsilon_to_delta(args.epsilon, constants)
    else:
        delta = DEFAULT_PTAS_DELTA
    g = build_for_delta(ps, delta, constants)
    if args.sample_out:
        write_delta_sample(g.sample, ensure_parent(args.sample_out))
    if args.graph_out:
        write_graph(g.graph, ensure_parent(args.graph_out), with_types=True)
    params = {"delta": delta, "c2": constants.c2, "c4": constants.c4}
    if args.epsilon is not None:
        params["epsilon"] = args.epsilon
    return (lambda i, j: ptas_nn_distance(g, i, j)), params


def cmd_dist(args) -> int:
    ps = PointSet(read_points_csv(args.input))
    if ps.n < 2:
        raise UsageError("need at least two sites")
    pairs = (list(combinations(range(ps.n), 2)) if args.all_pairs
             else _parse_pairs(args.pairs, ps.n))
    query, params = _query_fn(args, ps)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(lambda ij: query(*ij), pairs))
    payload = {
        "schema": SCHEMA,
        "command": "dist",
        "input": str(args.input),
        "algorithm": args.algorithm,
        "seed": args.seed,
        "parameters": params,
        "results": [r.to_dict(witness=args.witness) for r in results],
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.input:
        pts = read_points_csv(args.input)
    else:
        pts = generate_points("uniform", 10, 2, args.seed)
    checks = run_suite(PointSet(pts), args.level, args.seed, args.inject_fault)
    passed = all(c.passed for c in checks)
    payload = {
        "schema": SCHEMA,
        "command": "validate",
        "level": args.level,
        "seed": args.seed,
        "input": args.input,
        "passed": passed,
        "checks": [c.to_dict() for c in checks],
    }
    _emit(payload, args.out)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} ({c.seconds:.1f}s)", file=sys.stderr)
    return EXIT_OK if passed else EXIT_VALIDATION


def cmd_export_path(args) -> int:
    sites = read_points_csv(args.input)
    if sites.shape[1] != 2:
        raise UsageError("export-path needs planar (d = 2) input")
    with open(args.result) as fh:
        payload = json.load(fh)
    if payload.get("schema") != SCHEMA:
        raise UsageError(f"{args.result}: not a {SCHEMA} result file")
    records = payload["results"]
    if args.pairs:
        wanted = set(_parse_pairs(args.pairs, len(sites)))
        records = [r for r in records if (r["i"], r["j"]) in wanted]
    polylines = [r["witness_points"] for r in records if r.get("witness_points")]
    if not polylines:
        raise UsageError("no witness paths in the selected results; rerun dist with --witness")
    steiner = read_points_csv(args.steiner) if args.steiner else None
    svg = render_paths(sites, polylines, steiner, default_domain(sites))
    write_svg(ensure_parent(args.out), svg)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "dist": cmd_dist, "validate": cmd_validate, "export-path": cmd_export_path}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, ValueError, IndexError, OSError) as exc:
        print(f"nnmetric: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MemoryError as exc:
        print(f"nnmetric: resource limit: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"nnmetric: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
