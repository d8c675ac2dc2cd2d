"""Command-line front end: rsm / cka / retrieve / correlate / bench.

One binary, subcommand style.  Machine-readable results go to standard
output as a single JSON line; logs and errors go to standard error.
Exit codes: 0 success, 1 data error, 2 usage error.  SEMRSM_THREADS
mirrors --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, bench, retrieval, rsm, tensor_io
from .cka import cka_layer_matrix
from .assignment import MATCHER_KINDS, MatcherSpec
from .kernels import KERNEL_KINDS, KernelSpec
from .tensor_io import TensorIOError


class UsageError(Exception):
    pass


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get(rsm.THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _matcher_from_flags(args) -> MatcherSpec:
    kind = args.matcher
    try:
        if kind == "topk-greedy":
            if args.topk is None:
                raise UsageError("--matcher topk-greedy requires --topk")
            return MatcherSpec(kind, k=args.topk)
        if kind == "batch-optimal":
            return MatcherSpec(kind, b=args.batch_size if args.batch_size else 512)
        if args.topk is not None:
            raise UsageError(f"--topk is only valid with topk-greedy, not {kind}")
        if args.batch_size is not None:
            raise UsageError(f"--batch-size is only valid with batch-optimal, not {kind}")
        return MatcherSpec(kind)
    except ValueError as e:
        raise UsageError(str(e))


def _emit(payload: dict) -> None:
    print(json.dumps(payload), flush=True)


def _add_matcher_flags(p, default="none"):
    p.add_argument("--matcher", choices=MATCHER_KINDS, default=default)
    p.add_argument("--topk", type=int, default=None, metavar="K")
    p.add_argument("--batch-size", type=int, default=None, metavar="B")


def cmd_rsm(args) -> int:
    matcher = _matcher_from_flags(args)
    if args.dump_permutations and matcher.kind == "none":
        raise UsageError("--dump-permutations requires a matcher")
    kernel = KernelSpec(args.kernel)
    t0 = time.perf_counter()
    z = tensor_io.load_representations(args.input)
    if args.center:
        z, _ = tensor_io.center(z)
    sink = {} if args.dump_permutations else None
    if matcher.kind == "none":
        mat = rsm.spatio_semantic_rsm(z, kernel)
    else:
        mat = rsm.semantic_rsm(z, kernel, matcher, threads=_threads(args),
                               permutation_sink=sink, progress=True)
    tensor_io.save_matrix(mat, args.out, args.format)
    if sink is not None:
        np.savez(args.dump_permutations,
                 **{f"pair_{i}_{j}": p for (i, j), p in sink.items()})
    _emit({"n": z.n_samples, "kernel": args.kernel, "matcher": matcher.label(),
           "wall_time_s": round(time.perf_counter() - t0, 6), "out": str(args.out)})
    return 0


def _load_rsm_list(paths: str):
    return [tensor_io.load_matrix(p) for p in paths.split(",") if p]


def _write_grid(grid: np.ndarray, out: str) -> None:
    out = Path(out)
    np.save(out, grid)
    with open(out.with_suffix(".csv"), "w") as fh:
        for row in grid:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_cka(args) -> int:
    if args.diff:
        a = np.load(args.diff[0])
        b = np.load(args.diff[1])
        if a.shape != b.shape:
            raise ValueError(f"difference grids disagree in shape: {a.shape} vs {b.shape}")
        grid = a - b
    else:
        if not (args.a and args.b):
            raise UsageError("cka needs --a and --b (or --diff)")
        rsms_a = _load_rsm_list(args.a)
        rsms_b = _load_rsm_list(args.b)
        sizes = {m.n_rows for m in rsms_a + rsms_b}
        if len(sizes) != 1:
            raise ValueError(f"RSMs disagree in size: {sorted(sizes)}")
        grid = cka_layer_matrix(rsms_a, rsms_b)
    _write_grid(grid, args.out)
    _emit({"shape": list(grid.shape), "min": float(np.nanmin(grid)),
           "max": float(np.nanmax(grid)), "mean": float(np.nanmean(grid)),
           "out": str(args.out)})
    return 0


def cmd_retrieve(args) -> int:
    matcher = _matcher_from_flags(args)
    kernel = KernelSpec(args.kernel)
    queries = tensor_io.load_representations(args.queries)
    database = tensor_io.load_representations(args.database)
    if args.center:
        database, mean = tensor_io.center(database)
        queries, _ = tensor_io.center(queries, external_mean=mean)
    with open(args.labels) as fh:
        labels = json.load(fh)
    sim = rsm.cross_similarity(queries, database, kernel, matcher,
                               block=args.block, global_sigma=args.global_sigma,
                               threads=_threads(args), progress=True)
    report = retrieval.evaluate_retrieval(sim, labels, k=args.k, metric=args.metric,
                                          exclude_groups=args.exclude_groups)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    _emit({"metric": report["metric"], "k": report["k"], "mean": report["mean"],
           "n_queries": report["n_queries"], "n_scored": report["n_scored"]})
    return 0


def cmd_correlate(args) -> int:
    matcher = _matcher_from_flags(args)
    kernel = KernelSpec(args.kernel)
    z = tensor_io.load_representations(args.reps)
    if args.center:
        z, _ = tensor_io.center(z)
    probs = np.load(args.probs)
    if probs.dtype not in (np.float32, np.float64):
        raise ValueError(f"probabilities must be float32/float64, got {probs.dtype}")
    probs = probs.astype(np.float64)
    if args.from_logits:
        probs = analysis.softmax(probs)
    if matcher.kind == "none":
        sim = rsm.spatio_semantic_rsm(z, kernel)
    else:
        sim = rsm.semantic_rsm(z, kernel, matcher, threads=_threads(args))
    rho = analysis.correlate_similarity_jsd(sim, probs, method=args.method)
    jsds = analysis.pairwise_jsd(probs)
    scale = 1.0 / np.log(2.0) if args.log2 else 1.0
    _emit({"method": args.method, "rho": rho,
           "n_samples": z.n_samples, "n_pairs": len(jsds),
           "mean_jsd": float(jsds.mean() * scale) if len(jsds) else None,
           "log_base": "2" if args.log2 else "e",
           "kernel": args.kernel, "matcher": matcher.label()})
    return 0


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    try:
        matchers = [MatcherSpec.parse(tok) for tok in args.matchers.split(",") if tok]
    except ValueError as e:
        raise UsageError(str(e))
    if args.source == "representations-file" and not args.reps:
        raise UsageError("--source representations-file requires --reps")
    report = bench.bench_matchers(sizes, channels=args.channels, pairs=args.pairs,
                                  matchers=matchers, source=args.source,
                                  seed=args.seed, reps_path=args.reps)
    if args.out:
        bench.write_bench_report(report, args.out)
    # stdout carries only the reproducible fields; timings live in --out
    stable = [{k: c[k] for k in ("S", "matcher", "params", "mean_ratio",
                                 "n_pairs", "n_degenerate", "seed")}
              for c in report["cells"]]
    _emit({"cells": stable, "source": report["source"], "seed": report["seed"]})
    return 0


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="semrsm", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rsm", help="build a similarity matrix from representations")
    p.add_argument("--input", required=True)
    p.add_argument("--kernel", choices=KERNEL_KINDS, required=True)
    _add_matcher_flags(p)
    p.add_argument("--center", action="store_true")
    p.add_argument("--global-sigma", action="store_true",
                   help="accepted for symmetry with retrieve; square RSMs "
                        "always pool sigma over the whole batch")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("npy", "csv", "json"), default="npy")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--dump-permutations", default=None, metavar="PATH")
    p.set_defaults(func=cmd_rsm)

    p = sub.add_parser("cka", help="CKA grid between RSM lists, or grid difference")
    p.add_argument("--a", default=None, help="comma-separated RSM files")
    p.add_argument("--b", default=None, help="comma-separated RSM files")
    p.add_argument("--diff", nargs=2, default=None, metavar=("GRID_A", "GRID_B"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cka)

    p = sub.add_parser("retrieve", help="top-k retrieval scored by label overlap")
    p.add_argument("--queries", required=True)
    p.add_argument("--database", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--kernel", choices=KERNEL_KINDS, default="cosine")
    _add_matcher_flags(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--metric", choices=("f1", "iou"), default="f1")
    p.add_argument("--exclude-groups", action="store_true")
    p.add_argument("--block", type=int, default=100)
    p.add_argument("--center", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--global-sigma", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("correlate",
                       help="correlate pairwise similarity with output-probability JSD")
    p.add_argument("--reps", required=True)
    p.add_argument("--probs", required=True)
    p.add_argument("--kernel", choices=KERNEL_KINDS, default="cosine")
    _add_matcher_flags(p)
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.add_argument("--from-logits", action="store_true")
    p.add_argument("--log2", action="store_true",
                   help="report JSD in bits instead of nats")
    p.add_argument("--center", action="store_true")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("bench", help="time matchers and score them against optimal")
    p.add_argument("--sizes", required=True, help="comma-separated S values")
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--matchers", required=True,
                   help="comma-separated, e.g. optimal,greedy,batch-optimal:128")
    p.add_argument("--source", choices=("gaussian", "representations-file"),
                   default="gaussian")
    p.add_argument("--reps", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return top


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (TensorIOError, OSError, ValueError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
