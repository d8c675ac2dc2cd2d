"""Representational similarity matrices, positional and alignment-based.

``spatio_semantic_rsm`` compares samples at identical spatial locations
(flatten, then kernel).  ``semantic_rsm`` first aligns each pair's
spatial axes with a matcher — the permutation maximizing total linear
affinity — and only then evaluates the kernel, making the similarity
invariant to where concepts sit in the spatial grid.  The matching
objective is always linear even when the evaluation kernel is not; the
two choices are deliberately decoupled.

``cross_similarity`` builds the rectangular query x database matrix the
retrieval pipeline consumes, block by block.
"""

from __future__ import annotations

import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import assignment
from .assignment import MatcherSpec
from .kernels import (KernelSpec, gram_matrix, kernel_value, median_sigma,
                      resolve_sigma)
from .tensor_io import RepresentationBatch, SimilarityMatrix

# Exact matching is cubic in S; a 512-wide block keeps it exact for most
# CNN layer sizes and near-linear beyond.
DEFAULT_SEMANTIC_MATCHER = MatcherSpec("batch-optimal", b=512)

THREADS_ENV = "SEMRSM_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return 1


def _mirror_upper(values: np.ndarray) -> np.ndarray:
    # write exact symmetry instead of trusting BLAS to round both
    # triangles identically
    upper = np.triu(values)
    return upper + np.triu(values, 1).T


def spatio_semantic_rsm(z: RepresentationBatch, kernel: KernelSpec) -> SimilarityMatrix:
    """Kernel matrix over flattened representations; K[i][j] compares
    sample i and j location by location."""
    flat = z.flattened()
    sigma = resolve_sigma(kernel, flat)
    values = _mirror_upper(gram_matrix(flat, None, kernel, sigma))
    ids = z.ids()
    return SimilarityMatrix(values, "square-symmetric", kernel=kernel,
                            matcher=MatcherSpec("none"), row_ids=ids, col_ids=ids,
                            row_groups=z.group_ids, col_groups=z.group_ids)


def _pair_value(z, flat, norms, i, j, kernel, matcher, sigma):
    a = assignment.affinity(z.data[i], z.data[j], norms[i], norms[j])
    res = assignment.solve(a, matcher)
    aligned = z.data[j][:, res.permutation].reshape(-1)
    return kernel_value(kernel, flat[i], aligned, sigma), res.permutation


def semantic_rsm(z: RepresentationBatch, kernel: KernelSpec,
                 matcher: MatcherSpec = DEFAULT_SEMANTIC_MATCHER,
                 threads: int | None = None,
                 permutation_sink: dict | None = None,
                 progress: bool = False) -> SimilarityMatrix:
    """Alignment-based RSM: each off-diagonal pair is spatially matched
    before the kernel is evaluated.

    The diagonal never invokes the matcher (identity is already optimal
    for a sample against itself).  Pass a dict as ``permutation_sink`` to
    collect the per-pair permutations keyed by (i, j), i < j.
    """
    if matcher.kind == "none":
        raise ValueError("matcher 'none' gives the spatio-semantic RSM; "
                         "use spatio_semantic_rsm instead")
    n = z.n_samples
    flat = z.flattened()
    sigma = resolve_sigma(kernel, flat)
    # per-location norms, shared across every pair the sample appears in
    norms = np.linalg.norm(z.data, axis=1)

    values = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        values[i, i] = kernel_value(kernel, flat[i], flat[i], sigma)

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    workers = resolve_threads(threads)

    def run(pair):
        i, j = pair
        return _pair_value(z, flat, norms, i, j, kernel, matcher, sigma)

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(run, pairs, chunksize=max(1, len(pairs) // (4 * workers)))
            done = 0
            for (i, j), (v, perm) in zip(pairs, results):
                values[i, j] = values[j, i] = v
                if permutation_sink is not None:
                    permutation_sink[(i, j)] = perm
                done += 1
                if progress and done % 1000 == 0:
                    print(f"pairs {done}/{len(pairs)}", file=sys.stderr)
    else:
        for done, (i, j) in enumerate(pairs, 1):
            v, perm = run((i, j))
            values[i, j] = values[j, i] = v
            if permutation_sink is not None:
                permutation_sink[(i, j)] = perm
            if progress and done % 1000 == 0:
                print(f"pairs {done}/{len(pairs)}", file=sys.stderr)

    ids = z.ids()
    return SimilarityMatrix(values, "square-symmetric", kernel=kernel, matcher=matcher,
                            row_ids=ids, col_ids=ids,
                            row_groups=z.group_ids, col_groups=z.group_ids)


def cross_similarity(queries: RepresentationBatch, database: RepresentationBatch,
                     kernel: KernelSpec, matcher: MatcherSpec = MatcherSpec("none"),
                     block: int = 100, global_sigma: bool = False,
                     threads: int | None = None,
                     progress: bool = False) -> SimilarityMatrix:
    """Rectangular R x Q similarity computed in block x block tiles.

    RBF bandwidth follows the median heuristic per tile (queries and
    database rows of the tile pooled) unless ``global_sigma`` pools the
    whole inputs once; linear and cosine results are independent of the
    tiling.
    """
    if (queries.n_channels != database.n_channels
            or queries.n_spatial != database.n_spatial):
        raise ValueError(
            f"incompatible shapes {queries.data.shape[1:]} vs {database.data.shape[1:]}")
    if block < 1:
        raise ValueError(f"block must be >= 1, got {block}")

    r, q = queries.n_samples, database.n_samples
    qflat = queries.flattened()
    dflat = database.flattened()

    fixed_sigma = None
    if kernel.kind == "rbf":
        if kernel.sigma_policy == "fixed":
            fixed_sigma = kernel.sigma
        elif global_sigma:
            fixed_sigma = median_sigma(np.vstack([qflat, dflat]))

    qnorms = dnorms = None
    if matcher.kind != "none":
        qnorms = np.linalg.norm(queries.data, axis=1)
        dnorms = np.linalg.norm(database.data, axis=1)

    tiles = [(bi, bj) for bi in range(0, r, block) for bj in range(0, q, block)]
    values = np.empty((r, q), dtype=np.float64)

    def run_tile(tile):
        bi, bj = tile
        rows = slice(bi, min(bi + block, r))
        cols = slice(bj, min(bj + block, q))
        sigma = fixed_sigma
        if kernel.kind == "rbf" and sigma is None:
            sigma = median_sigma(np.vstack([qflat[rows], dflat[cols]]))
        if matcher.kind == "none":
            values[rows, cols] = gram_matrix(qflat[rows], dflat[cols], kernel, sigma)
            return
        for i in range(rows.start, rows.stop):
            for j in range(cols.start, cols.stop):
                a = assignment.affinity(queries.data[i], database.data[j],
                                        qnorms[i], dnorms[j])
                res = assignment.solve(a, matcher)
                aligned = database.data[j][:, res.permutation].reshape(-1)
                values[i, j] = kernel_value(kernel, qflat[i], aligned, sigma)

    workers = resolve_threads(threads)
    if workers > 1 and len(tiles) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done, _ in enumerate(pool.map(run_tile, tiles), 1):
                if progress and done % 20 == 0:
                    print(f"tiles {done}/{len(tiles)}", file=sys.stderr)
    else:
        for done, tile in enumerate(tiles, 1):
            run_tile(tile)
            if progress and done % 20 == 0:
                print(f"tiles {done}/{len(tiles)}", file=sys.stderr)

    return SimilarityMatrix(values, "rectangular", kernel=kernel, matcher=matcher,
                            row_ids=queries.ids(), col_ids=database.ids(),
                            row_groups=queries.group_ids, col_groups=database.group_ids)
