"""HSIC and Centered Kernel Alignment between similarity matrices.

The empirical HSIC here is the biased 1/(n-1)^2 estimator; CKA is its
normalized form, invariant to isotropic scaling of either matrix.
"""

from __future__ import annotations

import warnings

import numpy as np

from .tensor_io import SimilarityMatrix


def _square_values(m) -> np.ndarray:
    values = m.values if isinstance(m, SimilarityMatrix) else np.asarray(m, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {values.shape}")
    return values


def centering_matrix(n: int) -> np.ndarray:
    """H = I - (1/n) 11^T; symmetric, idempotent, trace n-1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def hsic(k, l) -> float:
    """tr(K H L H) / (n-1)^2 for same-size square K, L (n >= 2)."""
    kv = _square_values(k)
    lv = _square_values(l)
    n = kv.shape[0]
    if lv.shape[0] != n:
        raise ValueError(f"size mismatch: {kv.shape} vs {lv.shape}")
    if n < 2:
        raise ValueError("HSIC needs n >= 2")
    h = centering_matrix(n)
    m = h @ lv @ h
    # tr(K M) without forming the product matrix
    return float(np.sum(kv * m.T) / (n - 1) ** 2)


def cka(k, l) -> float | None:
    """HSIC(K,L) / sqrt(HSIC(K,K) HSIC(L,L)); None when a self-HSIC is
    not positive (a constant matrix has nothing to align)."""
    kv = _square_values(k)
    lv = _square_values(l)
    self_k = hsic(kv, kv)
    self_l = hsic(lv, lv)
    if self_k <= 0.0 or self_l <= 0.0:
        warnings.warn(f"degenerate CKA: self-HSIC {self_k:.3e} / {self_l:.3e}; "
                      "value undefined", stacklevel=2)
        return None
    return hsic(kv, lv) / np.sqrt(self_k * self_l)


def _batched_cka(a, b) -> float | None:
    """CKA of two RSMs, or the mean of per-batch CKAs when both sides are
    lists of mini-batch RSMs."""
    if isinstance(a, (list, tuple)) or isinstance(b, (list, tuple)):
        if not (isinstance(a, (list, tuple)) and isinstance(b, (list, tuple))
                and len(a) == len(b)):
            raise ValueError("mini-batch RSM lists must pair up one-to-one")
        vals = [cka(ka, kb) for ka, kb in zip(a, b)]
        if any(v is None for v in vals):
            return None
        return float(np.mean(vals))
    return cka(a, b)


def cka_layer_matrix(rsms_a, rsms_b) -> np.ndarray:
    """Grid of CKA values, entry [p][q] comparing rsms_a[p] with
    rsms_b[q].

    Each element may be a single RSM or a list of mini-batch RSMs; in the
    latter case CKA is computed per batch and averaged.  Degenerate
    entries surface as NaN.
    """
    out = np.empty((len(rsms_a), len(rsms_b)), dtype=np.float64)
    for p, ka in enumerate(rsms_a):
        for q, kb in enumerate(rsms_b):
            v = _batched_cka(ka, kb)
            out[p, q] = np.nan if v is None else v
    return out
