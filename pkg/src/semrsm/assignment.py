"""Affinity matrices and (approximate) maximum-weight bipartite matching.

Spatial alignment between two samples is found by matching their semantic
concept vectors (the per-location channel vectors): the affinity matrix
holds all pairwise inner products, and a matcher picks one column per row
maximizing the total.  Exact matching solves the linear assignment
problem; three norm-guided approximations trade optimality for speed:

* greedy: rows in descending L2-norm order each take the best free column
* topk-greedy: the k largest-norm rows/columns are matched exactly, the
  rest greedily
* batch-optimal: rows and columns are sorted by norm, split into blocks
  of size b, and each block pair is matched exactly

Tie-breaking (equal norms, equal affinities) is always by lowest index so
results do not depend on worker count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

MATCHER_KINDS = ("none", "optimal", "greedy", "topk-greedy", "batch-optimal")


@dataclass(frozen=True)
class MatcherSpec:
    """Matching strategy plus its parameters (k for topk-greedy, b for
    batch-optimal)."""

    kind: str
    k: int | None = None
    b: int | None = None

    def __post_init__(self):
        if self.kind not in MATCHER_KINDS:
            raise ValueError(f"unknown matcher kind {self.kind!r}")
        if self.kind == "topk-greedy":
            if self.k is None or self.k < 1:
                raise ValueError("topk-greedy requires k >= 1")
        elif self.k is not None:
            raise ValueError(f"k is only valid for topk-greedy, not {self.kind!r}")
        if self.kind == "batch-optimal":
            if self.b is None or self.b < 1:
                raise ValueError("batch-optimal requires b >= 1")
        elif self.b is not None:
            raise ValueError(f"b is only valid for batch-optimal, not {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.k is not None:
            out["k"] = self.k
        if self.b is not None:
            out["b"] = self.b
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MatcherSpec":
        return cls(d["kind"], d.get("k"), d.get("b"))

    @classmethod
    def parse(cls, text: str) -> "MatcherSpec":
        """Parse CLI syntax: "optimal", "topk-greedy:64", "batch-optimal:512"."""
        kind, _, param = text.partition(":")
        if not param:
            return cls(kind)
        if kind == "topk-greedy":
            return cls(kind, k=int(param))
        if kind == "batch-optimal":
            return cls(kind, b=int(param))
        raise ValueError(f"matcher {kind!r} takes no parameter")

    def label(self) -> str:
        if self.kind == "topk-greedy":
            return f"topk-greedy:{self.k}"
        if self.kind == "batch-optimal":
            return f"batch-optimal:{self.b}"
        return self.kind


@dataclass
class AffinityMatrix:
    """S x S inner products between the concept vectors of two samples,
    with the vectors' L2 norms alongside (the approximations key on them)."""

    values: np.ndarray
    row_norms: np.ndarray
    col_norms: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def validate(self, slack: float = 1e-6):
        """Check finiteness and the Cauchy-Schwarz bound; test helper."""
        if not np.isfinite(self.values).all():
            raise ValueError("affinity matrix has non-finite entries")
        bound = np.outer(self.row_norms, self.col_norms) + slack
        if (self.values > bound).any():
            raise ValueError("affinity exceeds the Cauchy-Schwarz bound")


@dataclass
class AssignmentResult:
    """A permutation of spatial locations plus its achieved total affinity.

    ``permutation[a]`` is the column assigned to row a; applying it to the
    second sample's spatial axis aligns it with the first.
    """

    permutation: np.ndarray
    total_affinity: float
    method: MatcherSpec
    solve_time: float


def affinity(z_i: np.ndarray, z_j: np.ndarray,
             row_norms: np.ndarray | None = None,
             col_norms: np.ndarray | None = None) -> AffinityMatrix:
    """Affinity between two C x S slices: values[a][b] = <v_i_a, v_j_b>.

    Precomputed per-location norms can be passed in to amortize the
    O(C*S) norm work across the many pairs each sample participates in.
    """
    z_i = np.asarray(z_i, dtype=np.float64)
    z_j = np.asarray(z_j, dtype=np.float64)
    if z_i.shape != z_j.shape or z_i.ndim != 2:
        raise ValueError(f"expected equal C x S slices, got {z_i.shape} and {z_j.shape}")
    values = z_i.T @ z_j
    if row_norms is None:
        row_norms = np.linalg.norm(z_i, axis=0)
    if col_norms is None:
        col_norms = np.linalg.norm(z_j, axis=0)
    return AffinityMatrix(values, row_norms, col_norms)


def evaluate_permutation(a: AffinityMatrix, permutation: np.ndarray) -> float:
    """Total affinity collected by a permutation: sum_a values[a][p[a]]."""
    s = a.size
    return float(a.values[np.arange(s), permutation].sum())


def _result(a: AffinityMatrix, permutation: np.ndarray, method: MatcherSpec,
            t0: float) -> AssignmentResult:
    total = evaluate_permutation(a, permutation)
    return AssignmentResult(permutation, total, method, time.perf_counter() - t0)


def _norm_order(norms: np.ndarray) -> np.ndarray:
    # stable sort on the negated norms: descending, lowest index first on ties
    return np.argsort(-norms, kind="stable")


def solve_optimal(a: AffinityMatrix) -> AssignmentResult:
    """Exact maximum-weight matching (linear sum assignment)."""
    values = a.values
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"affinity matrix must be square, got {values.shape}")
    t0 = time.perf_counter()
    _, cols = linear_sum_assignment(values, maximize=True)
    return _result(a, cols, MatcherSpec("optimal"), t0)


def solve_greedy(a: AffinityMatrix) -> AssignmentResult:
    """Greedy matching: rows in descending norm order take the best free
    column.  O(S log S) sort plus an O(S^2) scan."""
    values = a.values
    if values.shape[0] != values.shape[1]:
        raise ValueError(f"affinity matrix must be square, got {values.shape}")
    t0 = time.perf_counter()
    s = a.size
    perm = np.empty(s, dtype=np.intp)
    free = np.ones(s, dtype=bool)
    for r in _norm_order(a.row_norms):
        c = int(np.argmax(np.where(free, values[r], -np.inf)))
        perm[r] = c
        free[c] = False
    return _result(a, perm, MatcherSpec("greedy"), t0)


def solve_topk_greedy(a: AffinityMatrix, k: int) -> AssignmentResult:
    """The k largest-norm rows and columns (selected independently) are
    matched exactly; the remaining rows fall back to the greedy rule."""
    s = a.size
    if not 1 <= k <= s:
        raise ValueError(f"k must be in [1, {s}], got {k}")
    values = a.values
    t0 = time.perf_counter()
    row_order = _norm_order(a.row_norms)
    col_order = _norm_order(a.col_norms)
    top_rows = row_order[:k]
    top_cols = col_order[:k]

    perm = np.empty(s, dtype=np.intp)
    _, sub_cols = linear_sum_assignment(values[np.ix_(top_rows, top_cols)], maximize=True)
    perm[top_rows] = top_cols[sub_cols]

    free = np.ones(s, dtype=bool)
    free[top_cols] = False
    for r in row_order[k:]:
        c = int(np.argmax(np.where(free, values[r], -np.inf)))
        perm[r] = c
        free[c] = False
    return _result(a, perm, MatcherSpec("topk-greedy", k=k), t0)


def solve_batch_optimal(a: AffinityMatrix, b: int) -> AssignmentResult:
    """Norm-sorted rows and columns are split into consecutive blocks of
    size b; the a-th row block is matched exactly against the a-th column
    block.  b >= S degenerates to the exact solver; b = 1 to pure
    norm-rank pairing."""
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    s = a.size
    values = a.values
    b = min(b, s)
    t0 = time.perf_counter()
    row_order = _norm_order(a.row_norms)
    col_order = _norm_order(a.col_norms)
    perm = np.empty(s, dtype=np.intp)
    for start in range(0, s, b):
        rows = row_order[start:start + b]
        cols = col_order[start:start + b]
        if len(rows) == 1:
            perm[rows[0]] = cols[0]
            continue
        _, sub_cols = linear_sum_assignment(values[np.ix_(rows, cols)], maximize=True)
        perm[rows] = cols[sub_cols]
    return _result(a, perm, MatcherSpec("batch-optimal", b=b), t0)


def identity_assignment(s: int, a: AffinityMatrix | None = None) -> AssignmentResult:
    """The no-matching permutation [0..s-1]; its total is the affinity
    trace when an affinity matrix is given, else NaN."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    t0 = time.perf_counter()
    perm = np.arange(s, dtype=np.intp)
    if a is None:
        return AssignmentResult(perm, float("nan"), MatcherSpec("none"),
                                time.perf_counter() - t0)
    total = float(np.trace(a.values))
    return AssignmentResult(perm, total, MatcherSpec("none"), time.perf_counter() - t0)


def solve(a: AffinityMatrix, spec: MatcherSpec) -> AssignmentResult:
    """Dispatch an affinity matrix to the solver a MatcherSpec names."""
    if spec.kind == "none":
        return identity_assignment(a.size, a)
    if spec.kind == "optimal":
        return solve_optimal(a)
    if spec.kind == "greedy":
        return solve_greedy(a)
    if spec.kind == "topk-greedy":
        return solve_topk_greedy(a, spec.k)
    return solve_batch_optimal(a, spec.b)


def quality_ratio(approx: AssignmentResult, optimal: AssignmentResult) -> float | None:
    """Achieved total relative to the exact optimum, k / k_opt.

    Undefined (None) when the optimal total is zero.
    """
    if optimal.total_affinity == 0.0:
        return None
    return approx.total_affinity / optimal.total_affinity
