"""Output-distribution divergence (KL, JSD) and its correlation with
representational similarity.

All divergences use the natural logarithm, so JSD lives in [0, ln 2];
divide by ln 2 to read values in bits.  A negative correlation between
pairwise JSD and pairwise similarity means similar representations come
with similar predictions.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .tensor_io import SimilarityMatrix

# length-M non-negative vector summing to 1
ProbabilityVector = np.ndarray

_SUM_SLACK = 1e-4


def validate_probability(p) -> np.ndarray:
    """Check and renormalize a probability vector.

    Accepts sums within 1e-4 of 1 (float32 softmax dumps drift that far)
    and rescales them; anything further off, or any negative entry, is
    rejected.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probability vector must be 1-D, got shape {p.shape}")
    if (p < 0).any():
        raise ValueError("probability vector has negative entries")
    s = p.sum()
    if not abs(s - 1.0) <= _SUM_SLACK:
        raise ValueError(f"probabilities sum to {s!r}, not 1")
    return p / s


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    support = p > 0
    if (q[support] == 0).any():
        return float("inf")
    ps = p[support]
    return float(np.sum(ps * np.log(ps / q[support])))


def kl_divergence(p, q) -> float:
    """KL(P || Q) in nats; 0 log 0 terms vanish, and mass where Q has
    none makes it +inf."""
    p = validate_probability(p)
    q = validate_probability(q)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch {p.shape} vs {q.shape}")
    return _kl(p, q)


def jsd(p, q) -> float:
    """Jensen-Shannon divergence (nats): average KL to the midpoint
    distribution.  Symmetric, finite, in [0, ln 2]."""
    p = validate_probability(p)
    q = validate_probability(q)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch {p.shape} vs {q.shape}")
    m = 0.5 * (p + q)
    return 0.5 * _kl(p, m) + 0.5 * _kl(q, m)


def softmax(logits) -> np.ndarray:
    """Numerically stable softmax along the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def pearson(xs, ys) -> float | None:
    """Product-moment correlation; None when either input has zero
    variance."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length 1-D inputs, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("correlation needs at least 2 points")
    xm = x - x.mean()
    ym = y - y.mean()
    denom = np.sqrt(np.sum(xm * xm) * np.sum(ym * ym))
    if denom == 0.0:
        return None
    return float(np.sum(xm * ym) / denom)


def spearman(xs, ys) -> float | None:
    """Rank correlation (average ranks on ties); None on constant input."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length 1-D inputs, got {x.shape} and {y.shape}")
    return pearson(rankdata(x), rankdata(y))


def pairwise_jsd(probs) -> np.ndarray:
    """Strict-upper-triangle JSDs between rows of an N x M probability
    array, in np.triu_indices order."""
    rows = [validate_probability(p) for p in probs]
    n = len(rows)
    p = np.stack(rows)
    out = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n - 1):
            pi = p[i]
            rest = p[i + 1:]
            m = 0.5 * (pi + rest)
            ti = np.where(pi > 0, pi * np.log(np.where(pi > 0, pi / m, 1.0)), 0.0)
            tj = np.where(rest > 0, rest * np.log(np.where(rest > 0, rest / m, 1.0)), 0.0)
            out.append(0.5 * ti.sum(axis=1) + 0.5 * tj.sum(axis=1))
    return np.concatenate(out) if out else np.empty(0)


def correlate_similarity_jsd(sim: SimilarityMatrix, probs, method: str = "pearson"):
    """Correlation between pairwise similarity and pairwise JSD over the
    N(N-1)/2 distinct pairs (diagonal excluded by construction)."""
    if method not in ("pearson", "spearman"):
        raise ValueError(f"method must be pearson or spearman, got {method!r}")
    values = sim.values if isinstance(sim, SimilarityMatrix) else np.asarray(sim)
    n = values.shape[0]
    if values.ndim != 2 or values.shape[1] != n:
        raise ValueError(f"similarity matrix must be square, got {values.shape}")
    if len(probs) != n:
        raise ValueError(f"{len(probs)} probability rows for {n} samples")
    if n < 3:
        raise ValueError("need at least 3 samples (3 distinct pairs) to correlate")
    iu = np.triu_indices(n, 1)
    sims = values[iu]
    jsds = pairwise_jsd(probs)
    fn = pearson if method == "pearson" else spearman
    return fn(sims, jsds)
