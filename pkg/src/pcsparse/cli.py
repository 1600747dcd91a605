"""Command line entry point for point cloud sparsification.

Exit codes: 0 success, 2 bad flags, 3 input/output failure, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import baseline as _baseline
from . import cutpursuit as _cp
from .cloud import add_gaussian_noise, knn_graph
from .errors import DomainError, NumericalError, ParseError, StepSizeError
from .fileio import read_cloud, write_cloud
from .graphs import RegularizerSpec
from .solvers import PDConfig

__all__ = ["main", "MetricsReport"]


@dataclass
class MetricsReport:
    """Run summary written as stable-key JSON for diffable artifacts."""

    input_points: int = 0
    output_points: int = 0
    compression_percent: float = 0.0
    iterations: int = 0
    energy_trace: list = field(default_factory=list)
    phase_timings_ms: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_json(self):
        payload = asdict(self)
        return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="pcsparsify",
        description="Sparsify a point cloud by graph total-variation cut refinement.",
    )
    ap.add_argument("--input", required=True, help="input cloud (.ply ascii or .xyz)")
    ap.add_argument("--output", required=True, help="output cloud path")
    ap.add_argument("--k", type=int, default=8, help="nearest neighbors per point")
    ap.add_argument("--regularizer", choices=["l0", "pq"], default="l0")
    ap.add_argument("--p", type=float, default=1.0)
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=1.0, help="cut regularization weight")
    ap.add_argument(
        "--beta",
        type=float,
        default=None,
        help="reduced-solve regularization weight (defaults to alpha)",
    )
    ap.add_argument("--cut", choices=["auto", "aniso", "iso", "threshold"], default="auto")
    ap.add_argument("--direction", choices=["kmeans2", "pca", "random"], default="kmeans2")
    ap.add_argument("--debias", action="store_true", help="final means-only solve")
    ap.add_argument("--octree-iters", type=int, default=None, metavar="N",
                    help="run the zero-weight octree special case for N iterations")
    ap.add_argument("--noise-sigma", type=float, default=None)
    ap.add_argument("--noise-relative", action="store_true",
                    help="interpret --noise-sigma relative to the bounding box")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--baseline", action="store_true",
                    help="fine-to-coarse: full-graph solve plus cluster filter")
    ap.add_argument("--epsilon", type=float, default=1e-3,
                    help="baseline filter radius, relative to the domain size")
    ap.add_argument("--metrics", default=None, metavar="PATH.json")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--expand", action="store_true",
                    help="write the full-resolution piecewise-constant cloud")
    ap.add_argument("--report", default=None, metavar="DIR",
                    help="render diagnostic figures into DIR")
    ap.add_argument("--max-outer-iters", type=int, default=50)
    ap.add_argument("--stop-tol", type=float, default=None)
    ap.add_argument("--pd-tol", type=float, default=1e-5)
    ap.add_argument("--pd-max-iters", type=int, default=10000)
    ap.add_argument("--no-precondition", action="store_true")
    return ap


def _subset_constants(part, f):
    firsts = np.full(part.n_subsets, part.n_vertices, dtype=np.int64)
    np.minimum.at(firsts, part.assignment, np.arange(part.n_vertices))
    return f[firsts]


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)

    try:
        points = read_cloud(args.input)
    except (OSError, ParseError) as exc:
        print(f"pcsparsify: cannot read {args.input}: {exc}", file=sys.stderr)
        return 3

    if args.noise_sigma is not None:
        points = add_gaussian_noise(
            points, args.noise_sigma, seed=args.seed, relative=args.noise_relative
        )

    beta = args.alpha if args.beta is None else args.beta
    spec_kwargs = dict(alpha=args.alpha, beta=beta)
    if args.regularizer == "pq":
        spec = RegularizerSpec(kind="pq", p=args.p, q=args.q, **spec_kwargs)
    else:
        spec = RegularizerSpec(kind="l0", **spec_kwargs)

    pd_cfg = PDConfig(max_iters=args.pd_max_iters, rel_tol=args.pd_tol)
    cfg = _cp.CutPursuitConfig(
        spec=spec,
        cut_mode=args.cut,
        direction_mode=args.direction,
        stop_tol=args.stop_tol,
        max_outer_iters=args.max_outer_iters,
        octree_iters=args.octree_iters,
        debias=args.debias,
        pd=pd_cfg,
        precondition=not args.no_precondition,
        seed=args.seed,
    )

    t_start = time.perf_counter()
    try:
        graph, merge_map = knn_graph(points, args.k, workers=max(args.threads, 1))
        g = points[_first_occurrences(merge_map)]
        trace = None
        if args.baseline:
            if spec.kind != "pq":
                spec = RegularizerSpec(kind="pq", p=args.p, q=args.q, **spec_kwargs)
            out_points, trace = _baseline.direct_sparsify(
                graph,
                g,
                spec,
                pd_cfg,
                _baseline.FilterConfig(epsilon=args.epsilon),
                precondition=not args.no_precondition,
            )
            expanded = out_points
        elif args.octree_iters is not None:
            part, f, trace = _cp.run_octree(graph, g, args.octree_iters)
            out_points = _subset_constants(part, f)
            expanded = f[merge_map]
        elif spec.kind == "l0":
            part, f, trace = _cp.run_l0(graph, g, cfg)
            out_points = _subset_constants(part, f)
            expanded = f[merge_map]
        else:
            part, f, trace = _cp.run(graph, g, cfg)
            out_points = _subset_constants(part, f)
            expanded = f[merge_map]
    except (DomainError, StepSizeError, NumericalError) as exc:
        print(f"pcsparsify: numerical failure: {exc}", file=sys.stderr)
        return 4
    elapsed_ms = 1e3 * (time.perf_counter() - t_start)

    result = expanded if args.expand else out_points
    try:
        write_cloud(result, args.output)
    except (OSError, ParseError) as exc:
        print(f"pcsparsify: cannot write {args.output}: {exc}", file=sys.stderr)
        return 3

    report = MetricsReport(
        input_points=int(points.shape[0]),
        output_points=int(result.shape[0]),
        compression_percent=100.0 * result.shape[0] / points.shape[0],
        iterations=trace.n_iterations if trace else 0,
        energy_trace=[float(e) for e in (trace.energies if trace else [])],
        phase_timings_ms=(trace.phase_ms if trace else []) + [{"total_ms": elapsed_ms}],
        config={k: _jsonable(v) for k, v in vars(args).items()},
    )
    if args.metrics:
        try:
            with open(args.metrics, "w") as fh:
                fh.write(report.to_json() + "\n")
        except OSError as exc:
            print(f"pcsparsify: cannot write {args.metrics}: {exc}", file=sys.stderr)
            return 3
    if args.report:
        from .report import render_report

        render_report(args.report, points, result, trace, title=args.input)
    return 0


def _first_occurrences(merge_map):
    firsts = np.full(merge_map.max() + 1, merge_map.size, dtype=np.int64)
    np.minimum.at(firsts, merge_map, np.arange(merge_map.size))
    return firsts


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
