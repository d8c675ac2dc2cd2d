import math

import numpy as np
import pytest

from semrsm.analysis import (correlate_similarity_jsd, jsd, kl_divergence,
                             pairwise_jsd, pearson, softmax, spearman,
                             validate_probability)


def test_validate_probability_renormalizes_small_drift():
    p = validate_probability([0.50004, 0.50004])
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


def test_validate_probability_rejects():
    with pytest.raises(ValueError):
        validate_probability([0.6, 0.6])
    with pytest.raises(ValueError):
        validate_probability([1.1, -0.1])
    with pytest.raises(ValueError):
        validate_probability([[0.5, 0.5]])


def test_kl_divergence_values():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-12)
    assert kl_divergence([1.0, 0.0], [0.0, 1.0]) == math.inf
    with pytest.raises(ValueError):
        kl_divergence([1.0], [0.5, 0.5])


def test_kl_zero_times_log_zero_vanishes():
    # the q-side zero only matters where p has mass
    assert kl_divergence([0.0, 1.0], [0.0, 1.0]) == 0.0


def test_jsd_values():
    assert jsd([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert jsd([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.log(2), abs=1e-12)


def test_jsd_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    for _ in range(30):
        p = rng.dirichlet(np.ones(6))
        q = rng.dirichlet(np.ones(6))
        v = jsd(p, q)
        assert v == pytest.approx(jsd(q, p), abs=1e-12)
        assert -1e-12 <= v <= math.log(2) + 1e-12
        if not np.allclose(p, q):
            assert v > 0.0


def test_softmax_properties():
    z = np.array([1000.0, 1001.0, 999.0])  # would overflow a naive exp
    p = softmax(z)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.argmax(p) == 1
    small = softmax(np.array([0.0, math.log(3.0)]))
    assert small == pytest.approx([0.25, 0.75], abs=1e-12)
    two_d = softmax(np.zeros((4, 5)))
    assert np.allclose(two_d, 0.2)


def test_pearson_values():
    assert pearson([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(1.0, abs=1e-12)
    assert pearson([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0]) == pytest.approx(-1.0, abs=1e-12)
    assert pearson([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]) == pytest.approx(0.5, abs=1e-12)


def test_pearson_degenerate():
    assert pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None
    with pytest.raises(ValueError):
        pearson([1.0], [1.0])
    with pytest.raises(ValueError):
        pearson([1.0, 2.0], [1.0, 2.0, 3.0])


def test_spearman_values():
    assert spearman([1.0, 2.0, 3.0], [10.0, 20.0, 30.0]) == pytest.approx(1.0)
    assert spearman([1.0, 2.0, 3.0], [10.0, 20.0, 15.0]) == pytest.approx(0.5, abs=1e-12)
    assert spearman([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == pytest.approx(-1.0)
    assert spearman([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) is None


def test_spearman_monotone_transform_invariant():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(20)
    y = rng.standard_normal(20)
    base = spearman(x, y)
    assert spearman(np.exp(x), y) == pytest.approx(base, abs=1e-12)
    assert spearman(x, y ** 3) == pytest.approx(base, abs=1e-12)


def test_spearman_average_ties():
    # ranks of [1, 1, 2] are [1.5, 1.5, 3]
    v = spearman([1.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    expected = pearson([1.5, 1.5, 3.0], [1.0, 2.0, 3.0])
    assert v == pytest.approx(expected, abs=1e-12)


def test_pairwise_jsd_matches_scalar_loop():
    rng = np.random.default_rng(2)
    probs = rng.dirichlet(np.ones(5), size=6)
    probs[2, 1] = 0.0  # exercise empty support entries
    probs[2] /= probs[2].sum()
    flat = pairwise_jsd(probs)
    iu = np.triu_indices(6, 1)
    assert len(flat) == len(iu[0])
    for v, i, j in zip(flat, iu[0], iu[1]):
        assert v == pytest.approx(jsd(probs[i], probs[j]), abs=1e-12)


def test_correlate_affine_antirelation():
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(4), size=5)
    jsds = pairwise_jsd(probs)
    n = 5
    values = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    values[iu] = 1.0 - jsds
    values = values + values.T
    rho = correlate_similarity_jsd(values, probs, method="pearson")
    assert rho == pytest.approx(-1.0, abs=1e-9)
    rho_s = correlate_similarity_jsd(values, probs, method="spearman")
    assert rho_s == pytest.approx(-1.0, abs=1e-9)


def test_correlate_identical_probs_undefined():
    probs = np.tile([0.25, 0.75], (4, 1))
    sim = np.eye(4)
    assert correlate_similarity_jsd(sim, probs) is None


def test_correlate_input_validation():
    probs = np.tile([0.5, 0.5], (2, 1))
    with pytest.raises(ValueError):
        correlate_similarity_jsd(np.eye(2), probs)  # too few pairs
    with pytest.raises(ValueError):
        correlate_similarity_jsd(np.eye(3), probs)  # row count mismatch
    with pytest.raises(ValueError):
        correlate_similarity_jsd(np.eye(3), np.tile([0.5, 0.5], (3, 1)), method="tau")
