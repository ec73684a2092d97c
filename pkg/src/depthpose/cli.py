"""Command-line interface.

Subcommands:
  estimate  robust pose estimation on a pair file
  solve     run one raw minimal solve on named correspondences
  synth     generate a synthetic pair file with embedded ground truth
  bench     run a benchmark grid, emitting CSV + JSONL

Exit codes: 0 success, 1 I/O or parse error, 2 domain error (insufficient or
degenerate input, missing depth fields, bad sample indices). Timing values
are only written when --timing is passed, keeping default outputs
byte-deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import formats
from .robust import RansacConfig, ransac_estimate
from .solvers import SOLVERS, DegenerateSampleError, solve_minimal
from .synthbench import generate_scene, run_benchmark

EXIT_OK = 0
EXIT_IO = 1
EXIT_DOMAIN = 2

_SOLVER_CHOICES = tuple(SOLVERS)


def _write_out(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _domain_error(code: str, message: str, out_path) -> int:
    doc = {
        "format_version": formats.FORMAT_VERSION,
        "error": {"code": code, "message": message},
    }
    _write_out(formats.dump_json(doc), out_path)
    return EXIT_DOMAIN


def cmd_estimate(args) -> int:
    try:
        corrs, K1, K2, meta = formats.load_pair_file(args.pair)
    except formats.PairFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    config = RansacConfig(
        max_iterations=args.iters,
        threshold_px=args.threshold,
        seed=args.seed,
        lo_enabled=not args.no_lo,
    )
    try:
        report = ransac_estimate(corrs, K1, K2, args.solver, config)
    except (DegenerateSampleError, ValueError) as e:
        return _domain_error("estimation_failed", str(e), args.out)
    doc = report.to_dict(include_timing=args.timing)
    doc["format_version"] = formats.FORMAT_VERSION
    doc["error"] = None
    _write_out(formats.dump_json(doc), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        corrs, K1, K2, meta = formats.load_pair_file(args.pair)
    except formats.PairFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        idx = [int(s) for s in args.sample.split(",")]
    except ValueError:
        print("error: --sample must be a comma-separated index list", file=sys.stderr)
        return EXIT_IO
    spec = SOLVERS[args.solver]
    if len(idx) != spec.sample_size:
        return _domain_error(
            "bad_sample_arity",
            f"{args.solver} needs {spec.sample_size} indices, got {len(idx)}",
            args.out,
        )
    if len(set(idx)) != len(idx):
        return _domain_error("duplicate_indices", "sample indices must be distinct", args.out)
    if any(i < 0 or i >= len(corrs) for i in idx):
        return _domain_error("index_out_of_range", "sample index out of range", args.out)
    sample = [corrs[i] for i in idx]
    try:
        result = solve_minimal(args.solver, sample, K1, K2)
    except (DegenerateSampleError, ValueError) as e:
        return _domain_error("solve_failed", str(e), args.out)
    if args.solver == "7pt":
        cands = [{"fundamental": [float(x) for x in F.ravel()]} for F in result]
    else:
        cands = []
        for c in result:
            d = {
                "rotation": [float(x) for x in c.pose.rotation.matrix.ravel()],
                "translation": [float(x) for x in c.pose.translation],
                "residual": c.residual,
                "f1": c.f1,
                "f2": c.f2,
            }
            if c.depth_params is not None:
                d["depth_params"] = {
                    "s": c.depth_params.scale,
                    "u": c.depth_params.shift1,
                    "v": c.depth_params.shift2,
                }
            else:
                d["depth_params"] = None
            cands.append(d)
    doc = {
        "format_version": formats.FORMAT_VERSION,
        "solver": args.solver,
        "sample": idx,
        "candidates": cands,
        "error": None,
    }
    _write_out(formats.dump_json(doc), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        cfg = formats.load_scene_config(args.config)
    except formats.PairFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        scene = generate_scene(cfg)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    corrs, K1, K2, meta = formats.pair_file_from_scene(scene)
    formats.save_pair_file(args.out, corrs, K1, K2, meta)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        grid = formats.load_bench_grid(args.grid)
    except formats.PairFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("DEPTHPOSE_THREADS", "1"))
    try:
        rows, records = run_benchmark(grid, args.trials, threads=max(threads, 1))
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    with open(args.out_csv, "w") as fh:
        fh.write(formats.bench_rows_to_csv(rows, include_timing=args.timing))
    with open(args.out_jsonl, "w") as fh:
        fh.write(formats.bench_records_to_jsonl(records, include_timing=args.timing))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="depthpose",
        description="Two-view relative pose from point matches with per-point depth priors.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", help="robust estimation on a pair file")
    pe.add_argument("--pair", required=True)
    pe.add_argument("--solver", required=True, choices=_SOLVER_CHOICES)
    pe.add_argument("--threshold", type=float, default=2.0, help="inlier threshold in px")
    pe.add_argument("--iters", type=int, default=1000)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out", default=None, help="output JSON path (default: stdout)")
    pe.add_argument("--timing", action="store_true", help="include wall-clock timing")
    pe.add_argument("--no-lo", action="store_true", help="disable local optimization")
    pe.set_defaults(func=cmd_estimate)

    ps = sub.add_parser("solve", help="single minimal solve on named correspondences")
    ps.add_argument("--pair", required=True)
    ps.add_argument("--solver", required=True, choices=_SOLVER_CHOICES)
    ps.add_argument("--sample", required=True, help="comma-separated correspondence indices")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_solve)

    py = sub.add_parser("synth", help="generate a synthetic pair file")
    py.add_argument("--config", required=True, help="SceneConfig JSON path")
    py.add_argument("--out", required=True)
    py.set_defaults(func=cmd_synth)

    pb = sub.add_parser("bench", help="run a benchmark grid")
    pb.add_argument("--grid", required=True, help="grid JSON path")
    pb.add_argument("--trials", type=int, required=True)
    pb.add_argument("--out-csv", required=True)
    pb.add_argument("--out-jsonl", required=True)
    pb.add_argument("--timing", action="store_true")
    pb.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: DEPTHPOSE_THREADS or 1)")
    pb.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
