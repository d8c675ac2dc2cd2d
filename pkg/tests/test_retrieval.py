import numpy as np
import pytest

from semrsm.retrieval import (evaluate_retrieval, f1_instance_overlap,
                              iou_class_presence, retrieve_topk)
from semrsm.tensor_io import SimilarityMatrix


def sim_of(rows, **kw):
    return SimilarityMatrix(np.asarray(rows, dtype=np.float64), kind="rectangular", **kw)


def test_topk_basic():
    sim = sim_of([[0.1, 0.9, 0.5]])
    res = retrieve_topk(sim, 0, 1)
    assert res.ranked_ids == ["1"]
    assert res.scores == [0.9]
    assert not res.short


def test_topk_exclusion():
    sim = sim_of([[0.9, 0.8]], col_groups=["vid0", "vid1"])
    res = retrieve_topk(sim, 0, 1, exclude_group="vid0")
    assert res.ranked_ids == ["1"]


def test_topk_tie_break_by_lowest_index():
    sim = sim_of([[0.5, 0.5, 0.2]])
    res = retrieve_topk(sim, 0, 2)
    assert res.ranked_ids == ["0", "1"]


def test_topk_short_result():
    sim = sim_of([[0.3, 0.2, 0.7]], col_groups=["x", "y", "x"])
    res = retrieve_topk(sim, 0, 3, exclude_group="x")
    assert res.ranked_ids == ["1"]
    assert res.short


def test_topk_never_returns_excluded_and_scores_match():
    rng = np.random.default_rng(0)
    values = rng.uniform(size=(4, 12))
    groups = [f"g{j % 3}" for j in range(12)]
    sim = sim_of(values, col_groups=groups)
    for qi in range(4):
        res = retrieve_topk(sim, qi, 5, exclude_group="g1")
        assert all(int(c) % 3 != 1 for c in res.ranked_ids)
        for cid, score in zip(res.ranked_ids, res.scores):
            assert score == values[qi, int(cid)]
        assert res.scores == sorted(res.scores, reverse=True)


def test_topk_errors():
    sim = sim_of([[1.0, 0.0]])
    with pytest.raises(ValueError):
        retrieve_topk(sim, 0, 0)
    with pytest.raises(IndexError):
        retrieve_topk(sim, 5, 1)
    with pytest.raises(ValueError):
        retrieve_topk(sim, 0, 1, exclude_group="g")  # no groups attached


def test_f1_hand_case():
    assert f1_instance_overlap({"a": 2, "b": 1}, {"a": 1, "c": 1}) == 0.4


def test_f1_edge_cases():
    assert f1_instance_overlap({"a": 2}, {"a": 2}) == 1.0
    assert f1_instance_overlap({"a": 1}, {"b": 1}) == 0.0
    assert f1_instance_overlap({}, {}) == 1.0
    assert f1_instance_overlap({}, {"a": 3}) == 0.0


def test_f1_symmetric():
    rng = np.random.default_rng(1)
    classes = list("abcde")
    for _ in range(20):
        q = {c: int(rng.integers(0, 4)) for c in classes}
        d = {c: int(rng.integers(0, 4)) for c in classes}
        assert f1_instance_overlap(q, d) == pytest.approx(
            f1_instance_overlap(d, q), abs=1e-15)
        assert 0.0 <= f1_instance_overlap(q, d) <= 1.0


def test_iou_hand_cases():
    assert iou_class_presence({"road", "car"}, {"car", "sky"}) == pytest.approx(
        1.0 / 3.0, abs=1e-12)
    assert iou_class_presence({"a"}, {"a"}) == 1.0
    assert iou_class_presence({"a"}, {"b"}) == 0.0
    assert iou_class_presence(set(), set()) == 1.0


def test_evaluate_retrieval_three_query_oracle():
    # worked by hand: q0 -> d1 (F1 of {a:2} vs {a:1} = 2/3),
    # q1 -> d0 (disjoint, 0), q2 -> d2 (identical, 1)
    sim = sim_of([[0.1, 0.8, 0.3],
                  [0.9, 0.2, 0.1],
                  [0.0, 0.1, 0.9]],
                 row_ids=["q0", "q1", "q2"], col_ids=["d0", "d1", "d2"])
    labels = {
        "q0": {"a": 2}, "q1": {"b": 1}, "q2": {"c": 1, "d": 2},
        "d0": {"z": 1}, "d1": {"a": 1}, "d2": {"c": 1, "d": 2},
    }
    report = evaluate_retrieval(sim, labels, k=1, metric="f1")
    expected = (2.0 / 3.0 + 0.0 + 1.0) / 3.0
    assert report["mean"] == pytest.approx(expected, abs=1e-12)
    assert report["n_queries"] == 3 and report["n_scored"] == 3
    assert [r["query_id"] for r in report["queries"]] == ["q0", "q1", "q2"]
    assert report["queries"][0]["retrieved"] == ["d1"]


def test_evaluate_retrieval_perfect_duplicates():
    sim = sim_of(np.eye(3), row_ids=["a", "b", "c"], col_ids=["a2", "b2", "c2"])
    labels = {"a": {"x": 1}, "a2": {"x": 1}, "b": {"y": 2}, "b2": {"y": 2},
              "c": {"z": 1}, "c2": {"z": 1}}
    report = evaluate_retrieval(sim, labels)
    assert report["mean"] == 1.0


def test_evaluate_retrieval_disjoint_labels():
    rng = np.random.default_rng(2)
    sim = sim_of(rng.uniform(size=(3, 4)),
                 row_ids=["qa", "qb", "qc"], col_ids=["da", "db", "dc", "dd"])
    labels = {"qa": {"1": 1}, "qb": {"2": 1}, "qc": {"3": 1},
              "da": {"4": 1}, "db": {"5": 1}, "dc": {"6": 1}, "dd": {"7": 1}}
    report = evaluate_retrieval(sim, labels)
    assert report["mean"] == 0.0


def test_evaluate_retrieval_iou_uses_presence():
    sim = sim_of([[1.0]], row_ids=["q"], col_ids=["d"])
    labels = {"q": {"a": 3, "b": 0}, "d": {"a": 1, "c": 2}}
    report = evaluate_retrieval(sim, labels, metric="iou")
    # presence sets {a} vs {a, c} -> 1/2; the zero-count b does not count
    assert report["mean"] == pytest.approx(0.5)


def test_evaluate_retrieval_missing_label_names_id():
    sim = sim_of([[1.0]], row_ids=["q"], col_ids=["d"])
    with pytest.raises(KeyError, match="q"):
        evaluate_retrieval(sim, {"d": {}})
    with pytest.raises(KeyError, match="d"):
        evaluate_retrieval(sim, {"q": {}})


def test_evaluate_retrieval_group_exclusion():
    sim = sim_of([[1.0, 0.5]], row_ids=["q"], col_ids=["same", "other"],
                 row_groups=["vid1"], col_groups=["vid1", "vid2"])
    labels = {"q": {"a": 1}, "same": {"a": 1}, "other": {"b": 1}}
    free = evaluate_retrieval(sim, labels)
    assert free["mean"] == 1.0  # picks its groupmate
    fenced = evaluate_retrieval(sim, labels, exclude_groups=True)
    assert fenced["mean"] == 0.0  # groupmate fenced off, disjoint neighbor


def test_evaluate_retrieval_all_excluded():
    sim = sim_of([[1.0]], row_ids=["q"], col_ids=["d"],
                 row_groups=["g"], col_groups=["g"])
    report = evaluate_retrieval(sim, {"q": {}, "d": {}}, exclude_groups=True)
    assert report["n_scored"] == 0
    assert report["mean"] is None
    assert report["queries"][0]["value"] is None


def test_evaluate_retrieval_bad_metric():
    with pytest.raises(ValueError):
        evaluate_retrieval(sim_of([[1.0]]), {"0": {}}, metric="accuracy")
