"""Top-k retrieval over a cross-similarity matrix, with the label-overlap
metrics used to score it.

Labels are per-id instance counts ({"car": 2, "road": 1}); F1 measures
instance overlap between query and retrieved annotations, IoU only class
presence.  Retrieval can exclude the query's own group (e.g. frames of
the same video) from the candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .tensor_io import SimilarityMatrix

# class-id -> non-negative instance count; an absent class means zero
InstanceCounts = Mapping[str, float]


@dataclass
class RetrievalResult:
    query_id: str
    ranked_ids: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    short: bool = False  # fewer eligible columns than requested


def retrieve_topk(sim: SimilarityMatrix, query_index: int, k: int,
                  exclude_group=None) -> RetrievalResult:
    """The k most-similar database columns for one query row, descending,
    ties broken by lowest column index.

    With ``exclude_group`` set, columns of that group are removed before
    ranking; if fewer than k columns survive, all of them are returned
    and the result is flagged short.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= query_index < sim.n_rows:
        raise IndexError(f"query index {query_index} outside {sim.n_rows} rows")
    row = sim.values[query_index]
    eligible = np.arange(sim.n_cols)
    if exclude_group is not None:
        if sim.col_groups is None:
            raise ValueError("similarity matrix carries no column groups to exclude")
        keep = np.array([g != exclude_group for g in sim.col_groups])
        eligible = eligible[keep]
    # stable sort on negated scores: descending, first index wins ties
    order = eligible[np.argsort(-row[eligible], kind="stable")]
    top = order[:k]
    col_ids = sim.col_ids if sim.col_ids is not None else [str(c) for c in range(sim.n_cols)]
    qid = sim.row_ids[query_index] if sim.row_ids is not None else str(query_index)
    return RetrievalResult(query_id=qid,
                           ranked_ids=[col_ids[c] for c in top],
                           scores=[float(row[c]) for c in top],
                           short=len(top) < k)


def f1_instance_overlap(q: InstanceCounts, d: InstanceCounts) -> float:
    """F1 over instance counts: TP = sum min(Q_c, D_c), FN/FP the
    leftover query/database instances.  Two empty annotations agree
    perfectly (1.0)."""
    tp = fn = fp = 0.0
    for c in set(q) | set(d):
        qc = q.get(c, 0)
        dc = d.get(c, 0)
        tp += min(qc, dc)
        fn += max(0, qc - dc)
        fp += max(0, dc - qc)
    denom = 2.0 * tp + fp + fn
    if denom == 0.0:
        return 1.0
    return 2.0 * tp / denom


def iou_class_presence(q, d) -> float:
    """|q & d| / |q | d| over class-id sets; both empty -> 1.0."""
    q = set(q)
    d = set(d)
    if not q and not d:
        return 1.0
    return len(q & d) / len(q | d)


def _presence(counts: InstanceCounts) -> set:
    return {c for c, n in counts.items() if n > 0}


def evaluate_retrieval(sim: SimilarityMatrix, labels: Mapping[str, InstanceCounts],
                       k: int = 1, metric: str = "f1",
                       exclude_groups: bool = False) -> dict:
    """Score every query by its rank-1 neighbor's label overlap.

    Ranked lists of length k are carried in the report for inspection,
    but the metric is always evaluated at rank 1.  Rows are ordered by
    query id; the mean skips queries with no eligible neighbor.
    """
    if metric not in ("f1", "iou"):
        raise ValueError(f"metric must be f1 or iou, got {metric!r}")
    if exclude_groups and sim.row_groups is None:
        raise ValueError("similarity matrix carries no row groups to exclude")

    rows = []
    values = []
    for i in range(sim.n_rows):
        group = sim.row_groups[i] if exclude_groups else None
        res = retrieve_topk(sim, i, k, exclude_group=group)
        if res.query_id not in labels:
            raise KeyError(f"no label entry for query id {res.query_id!r}")
        entry = {"query_id": res.query_id, "retrieved": res.ranked_ids,
                 "scores": res.scores, "short": res.short}
        if res.ranked_ids:
            top1 = res.ranked_ids[0]
            if top1 not in labels:
                raise KeyError(f"no label entry for retrieved id {top1!r}")
            if metric == "f1":
                v = f1_instance_overlap(labels[res.query_id], labels[top1])
            else:
                v = iou_class_presence(_presence(labels[res.query_id]),
                                       _presence(labels[top1]))
            entry["value"] = v
            values.append(v)
        else:
            entry["value"] = None
        rows.append(entry)

    rows.sort(key=lambda r: r["query_id"])
    return {
        "metric": metric,
        "k": k,
        "n_queries": sim.n_rows,
        "n_scored": len(values),
        "mean": float(np.mean(values)) if values else None,
        "queries": rows,
    }
