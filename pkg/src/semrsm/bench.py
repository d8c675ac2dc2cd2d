"""Matcher benchmarking: wall time per solve and match quality relative
to the exact optimum, across spatial sizes.

Timing is strictly sequential (one solve at a time) so numbers are
comparable across matchers; only the solve itself is inside the clock —
affinity construction and the optimal reference solve are not.  Quality
is quality_ratio against the exact solver on the same affinity matrix,
with zero-optimal pairs excluded and counted.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from . import assignment
from .assignment import MatcherSpec
from .tensor_io import RepresentationBatch, load_representations

DEFAULT_BENCH_MATCHERS = (
    MatcherSpec("none"),
    MatcherSpec("greedy"),
    MatcherSpec("topk-greedy", k=8),
    MatcherSpec("batch-optimal", b=64),
    MatcherSpec("optimal"),
)


def _gaussian_pairs(rng, pairs, channels, s):
    out = []
    for _ in range(pairs):
        z = rng.standard_normal((2, channels, s))
        out.append((z[0], z[1]))
    return out


def _file_pairs(rng, pairs, s, reps_path):
    batch = load_representations(reps_path)
    if batch.n_spatial < s:
        raise ValueError(
            f"representations file has S={batch.n_spatial}, too small for S={s}")
    if batch.n_samples < 2:
        raise ValueError("representations file needs at least 2 samples")
    data = batch.data[:, :, :s]
    n = batch.n_samples
    out = []
    for _ in range(pairs):
        i, j = rng.choice(n, size=2, replace=False)
        out.append((data[i], data[j]))
    return out


def bench_matchers(sizes, channels: int = 16, pairs: int = 10,
                   matchers=DEFAULT_BENCH_MATCHERS, source: str = "gaussian",
                   seed: int = 0, reps_path=None) -> dict:
    """Time each matcher on each spatial size S.

    Every (S, matcher) cell gets 3 untimed warmup solves, then one timed
    solve per pair; the exact solver runs once per pair outside the clock
    to provide the quality reference.  The optimal matcher itself is
    reported with ratio 1.0.
    """
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    if source not in ("gaussian", "representations-file"):
        raise ValueError(f"unknown source {source!r}")
    rng = np.random.default_rng(seed)
    cells = []
    for s in sizes:
        if source == "gaussian":
            slices = _gaussian_pairs(rng, pairs, channels, s)
        else:
            slices = _file_pairs(rng, pairs, s, reps_path)
        affs = [assignment.affinity(zi, zj) for zi, zj in slices]
        opt_totals = [assignment.solve_optimal(a).total_affinity for a in affs]
        for m in matchers:
            for a in (affs * 3)[:3]:  # warmup: caches, allocator, JIT-free but real
                assignment.solve(a, m)
            times = []
            ratios = []
            degenerate = 0
            for a, opt_total in zip(affs, opt_totals):
                t0 = time.perf_counter_ns()
                res = assignment.solve(a, m)
                times.append(time.perf_counter_ns() - t0)
                if m.kind == "optimal":
                    ratios.append(1.0)
                elif opt_total == 0.0:
                    degenerate += 1
                else:
                    ratios.append(res.total_affinity / opt_total)
            cells.append({
                "S": int(s),
                "matcher": m.kind,
                "params": {k: v for k, v in (("k", m.k), ("b", m.b)) if v is not None},
                "mean_time_ns": float(np.mean(times)),
                "median_time_ns": float(np.median(times)),
                "mean_ratio": float(np.mean(ratios)) if ratios else None,
                "n_pairs": len(times),
                "n_degenerate": degenerate,
                "seed": seed,
            })
    return {"cells": cells, "source": source, "channels": int(channels), "seed": seed}


def write_bench_report(report: dict, out_path) -> None:
    """JSON report plus a CSV mirror of the cells next to it."""
    out_path = Path(out_path)
    out_path.write_text(json.dumps(report, indent=2) + "\n")
    fields = ["S", "matcher", "params", "mean_time_ns", "median_time_ns",
              "mean_ratio", "n_pairs", "n_degenerate", "seed"]
    with open(out_path.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for cell in report["cells"]:
            row = dict(cell)
            row["params"] = json.dumps(row["params"], sort_keys=True)
            w.writerow(row)


def _stats(ratios) -> dict:
    arr = np.asarray(ratios, dtype=np.float64)
    pct = np.percentile(arr, [5, 25, 50, 75, 95])
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "p5": float(pct[0]), "p25": float(pct[1]), "p50": float(pct[2]),
        "p75": float(pct[3]), "p95": float(pct[4]),
    }


def relative_similarity_distribution(z: RepresentationBatch, matcher: MatcherSpec,
                                     pairs: int, seed: int = 0) -> dict:
    """Distribution of per-pair totals relative to the exact optimum, for
    the identity permutation and for the given matcher, over a seeded
    sample of distinct pairs."""
    n = z.n_samples
    max_pairs = n * (n - 1) // 2
    if not 1 <= pairs <= max_pairs:
        raise ValueError(f"pairs must be in [1, {max_pairs}], got {pairs}")
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(all_pairs), size=pairs, replace=False)

    norms = np.linalg.norm(z.data, axis=1)
    identity_ratios = []
    matcher_ratios = []
    degenerate = 0
    for idx in chosen:
        i, j = all_pairs[idx]
        a = assignment.affinity(z.data[i], z.data[j], norms[i], norms[j])
        opt = assignment.solve_optimal(a)
        if opt.total_affinity == 0.0:
            degenerate += 1
            continue
        identity_ratios.append(float(np.trace(a.values)) / opt.total_affinity)
        res = assignment.solve(a, matcher)
        matcher_ratios.append(res.total_affinity / opt.total_affinity)

    return {
        "matcher": matcher.label(),
        "n_pairs": len(identity_ratios),
        "n_degenerate": degenerate,
        "seed": seed,
        "identity": _stats(identity_ratios) if identity_ratios else None,
        "matched": _stats(matcher_ratios) if matcher_ratios else None,
    }
