import numpy as np
import pytest

from semrsm.cka import centering_matrix, cka, cka_layer_matrix, hsic
from semrsm.kernels import KernelSpec
from semrsm.rsm import spatio_semantic_rsm
from semrsm.tensor_io import RepresentationBatch, SimilarityMatrix


def random_psd(rng, n):
    x = rng.standard_normal((n, n + 2))
    g = x @ x.T
    return np.triu(g) + np.triu(g, 1).T


def random_symmetric(rng, n):
    x = rng.standard_normal((n, n))
    return x + x.T


def test_centering_matrix_hand_values():
    assert np.array_equal(centering_matrix(2), [[0.5, -0.5], [-0.5, 0.5]])
    assert np.array_equal(centering_matrix(1), [[0.0]])
    with pytest.raises(ValueError):
        centering_matrix(0)


def test_centering_matrix_kills_constants():
    h = centering_matrix(5)
    assert np.allclose(h @ np.ones(5), 0.0, atol=1e-14)
    assert np.trace(h) == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 7, 50, 1000])
def test_centering_matrix_idempotent(n):
    h = centering_matrix(n)
    assert np.abs(h @ h - h).max() < 1e-12
    assert np.array_equal(h, h.T)


def test_hsic_identity_pair():
    assert hsic(np.eye(2), np.eye(2)) == 1.0


def test_hsic_annihilates_constant_matrix():
    rng = np.random.default_rng(0)
    k = random_symmetric(rng, 6)
    assert abs(hsic(k, np.ones((6, 6)))) < 1e-12


def test_hsic_symmetric_in_arguments():
    rng = np.random.default_rng(1)
    for _ in range(5):
        k = random_symmetric(rng, 5)
        l = random_symmetric(rng, 5)
        assert hsic(k, l) == pytest.approx(hsic(l, k), rel=1e-9, abs=1e-12)


def test_hsic_input_validation():
    with pytest.raises(ValueError):
        hsic(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        hsic(np.eye(1), np.eye(1))
    with pytest.raises(ValueError):
        hsic(np.ones((2, 3)), np.ones((2, 3)))


def test_hsic_accepts_similarity_matrix():
    m = SimilarityMatrix(np.eye(2))
    assert hsic(m, m) == 1.0


def test_cka_self_is_one():
    rng = np.random.default_rng(2)
    for _ in range(5):
        k = random_psd(rng, 8)
        assert cka(k, k) == pytest.approx(1.0, abs=1e-9)


def test_cka_scale_invariance():
    rng = np.random.default_rng(3)
    k = random_psd(rng, 10)
    l = random_psd(rng, 10)
    base = cka(k, l)
    assert cka(3.0 * k, l) == pytest.approx(base, abs=1e-9)
    assert cka(k, 0.25 * l) == pytest.approx(base, abs=1e-9)


def test_cka_degenerate_returns_none_with_warning():
    const = np.ones((4, 4))
    k = random_psd(np.random.default_rng(4), 4)
    with pytest.warns(UserWarning):
        assert cka(const, k) is None


def test_cka_identity_pair():
    assert cka(np.eye(2), np.eye(2)) == pytest.approx(1.0, abs=1e-12)


def test_layer_matrix_self_single_layer():
    k = random_psd(np.random.default_rng(5), 6)
    grid = cka_layer_matrix([k], [k])
    assert grid.shape == (1, 1)
    assert grid[0, 0] == pytest.approx(1.0, abs=1e-9)


def test_layer_matrix_scaled_layers():
    k = random_psd(np.random.default_rng(6), 6)
    grid = cka_layer_matrix([k, 2.0 * k], [k, 2.0 * k])
    assert np.allclose(grid, 1.0, atol=1e-9)


def test_layer_matrix_bounds_on_psd_ensemble():
    rng = np.random.default_rng(7)
    a = [random_psd(rng, 10) for _ in range(3)]
    b = [random_psd(rng, 10) for _ in range(4)]
    grid = cka_layer_matrix(a, b)
    assert grid.shape == (3, 4)
    assert (grid >= -1e-9).all() and (grid <= 1.0 + 1e-9).all()


def test_layer_matrix_minibatch_averaging():
    rng = np.random.default_rng(8)
    a1, a2 = random_psd(rng, 6), random_psd(rng, 6)
    b1, b2 = random_psd(rng, 6), random_psd(rng, 6)
    grid = cka_layer_matrix([[a1, a2]], [[b1, b2]])
    expected = 0.5 * (cka(a1, b1) + cka(a2, b2))
    assert grid[0, 0] == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        cka_layer_matrix([[a1, a2]], [[b1]])


def test_cka_on_real_rsms():
    rng = np.random.default_rng(9)
    z = RepresentationBatch(rng.standard_normal((10, 4, 6)))
    k = spatio_semantic_rsm(z, KernelSpec("linear"))
    l = spatio_semantic_rsm(z, KernelSpec("cosine"))
    v = cka(k, l)
    assert 0.0 <= v <= 1.0 + 1e-9
    assert cka(k, k) == pytest.approx(1.0, abs=1e-12)
