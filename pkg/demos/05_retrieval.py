"""
Retrieval with and without spatial matching
===========================================

Every query hides in the database as a spatially permuted copy among
random distractors.  Scoring top-1 retrieval by instance-count F1 shows
position matching is what makes the copies findable.
"""

import numpy as np

from semrsm import (KernelSpec, MatcherSpec, RepresentationBatch,
                    cross_similarity, evaluate_retrieval)

rng = np.random.default_rng(11)
n_queries, n_db, c, s = 20, 80, 8, 16

queries = rng.standard_normal((n_queries, c, s))
database = rng.standard_normal((n_db, c, s))
labels = {}
for i in range(n_queries):
    # drop a permuted copy of query i at database slot i
    database[i] = queries[i][:, rng.permutation(s)]
    labels[f"q{i}"] = labels[f"d{i}"] = {f"object_{i}": 1}
for j in range(n_queries, n_db):
    labels[f"d{j}"] = {f"clutter_{j}": 1}

q = RepresentationBatch(queries, sample_ids=[f"q{i}" for i in range(n_queries)])
db = RepresentationBatch(database, sample_ids=[f"d{j}" for j in range(n_db)])

kernel = KernelSpec("cosine")
for label, matcher in [("positions as-is", MatcherSpec("none")),
                       ("positions matched", MatcherSpec("optimal"))]:
    sim = cross_similarity(q, db, kernel, matcher)
    report = evaluate_retrieval(sim, labels, k=1, metric="f1")
    hits = sum(r["value"] == 1.0 for r in report["queries"])
    print(f"{label:>18}: mean F1@1 = {report['mean']:.2f} "
          f"({hits}/{n_queries} copies found)")

print("\nThe permuted copy carries the query's exact content, but only "
      "the matched comparison ranks it first.")
