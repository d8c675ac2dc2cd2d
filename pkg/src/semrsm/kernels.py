"""Similarity kernels between flattened representation vectors.

Three kernels are supported: the linear kernel (plain inner product,
unbounded), the RBF kernel (bounded in (0, 1]) and the cosine similarity
(bounded in [-1, 1]).  The RBF bandwidth defaults to the median heuristic:
sigma is the square root of the median Euclidean distance over all vector
pairs in the batch the kernel is applied to.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

KERNEL_KINDS = ("linear", "rbf", "cosine")
SIGMA_POLICIES = ("median-heuristic", "fixed")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus the RBF bandwidth policy.

    ``sigma_policy`` is only meaningful for the RBF kernel: either
    ``"median-heuristic"`` or ``"fixed"`` (which requires ``sigma > 0``).
    For ``linear`` and ``cosine`` no policy may be given.
    """

    kind: str
    sigma_policy: str | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            policy = self.sigma_policy or "median-heuristic"
            object.__setattr__(self, "sigma_policy", policy)
            if policy not in SIGMA_POLICIES:
                raise ValueError(f"unknown sigma policy {policy!r}")
            if policy == "fixed":
                if self.sigma is None or self.sigma <= 0:
                    raise ValueError("fixed sigma policy requires sigma > 0")
            elif self.sigma is not None:
                raise ValueError("sigma is only valid with the fixed policy")
        else:
            if self.sigma_policy is not None or self.sigma is not None:
                raise ValueError(f"sigma policy is rbf-only, not valid for {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "rbf":
            out["sigma_policy"] = self.sigma_policy
            if self.sigma is not None:
                out["sigma"] = float(self.sigma)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["kind"], d.get("sigma_policy"), d.get("sigma"))


def _check_lengths(x: np.ndarray, y: np.ndarray):
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"expected equal-length vectors, got shapes {x.shape} and {y.shape}")


def linear_kernel(x, y) -> float:
    """Inner product <x, y>.  Unbounded."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_lengths(x, y)
    return float(np.dot(x, y))


def rbf_kernel(x, y, sigma: float) -> float:
    """exp(-||x - y||^2 / (2 sigma^2)).  Equals 1 iff x == y."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_lengths(x, y)
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / (2.0 * sigma**2)))


def cosine_kernel(x, y) -> float:
    """<x, y> / (||x|| ||y||), scale-invariant.

    A zero vector carries no direction: similarity against it is defined
    as 0, and as 1 if both vectors are zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_lengths(x, y)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 and ny == 0.0:
        return 1.0
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


def median_sigma(vectors) -> float:
    """Median-heuristic RBF bandwidth over a set of vectors.

    sigma = sqrt(median of all pairwise Euclidean distances).  Accepts a
    2-D array of row vectors, a 3-D activation tensor (samples are
    flattened), or a RepresentationBatch.  With an even number of pairs
    the median is the mean of the two central order statistics.  If the
    median distance is 0 (all vectors identical) sigma falls back to 1.0
    with a warning; the RBF kernel then degenerates to an exact-match
    indicator.
    """
    data = getattr(vectors, "data", vectors)
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 3:
        data = data.reshape(data.shape[0], -1)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D or 3-D array of vectors, got ndim={data.ndim}")
    if data.shape[0] < 2:
        raise ValueError("median sigma needs at least 2 vectors")
    med = float(np.median(pdist(data, metric="euclidean")))
    if med == 0.0:
        warnings.warn("median pairwise distance is 0; falling back to sigma=1.0")
        return 1.0
    return float(np.sqrt(med))


def resolve_sigma(spec: KernelSpec, vectors) -> float | None:
    """Bandwidth for an RBF spec given the vectors it will be applied to.

    Returns None for non-RBF kernels.
    """
    if spec.kind != "rbf":
        return None
    if spec.sigma_policy == "fixed":
        return float(spec.sigma)
    return median_sigma(vectors)


def kernel_value(spec: KernelSpec, x, y, sigma: float | None = None) -> float:
    """Evaluate a kernel spec on a single vector pair."""
    if spec.kind == "linear":
        return linear_kernel(x, y)
    if spec.kind == "cosine":
        return cosine_kernel(x, y)
    if sigma is None:
        raise ValueError("rbf kernel needs a resolved sigma")
    return rbf_kernel(x, y, sigma)


def gram_matrix(x: np.ndarray, y: np.ndarray | None = None, spec: KernelSpec = None,
                sigma: float | None = None) -> np.ndarray:
    """Vectorized kernel matrix between row-vector sets x (n,d) and y (m,d).

    y=None means y=x; in that case the RBF squared distances reuse the
    Gram diagonal so the result's diagonal is exactly 1.
    """
    x = np.asarray(x, dtype=np.float64)
    symmetric = y is None
    y = x if symmetric else np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValueError(f"incompatible vector sets {x.shape} and {y.shape}")

    inner = x @ y.T
    if spec.kind == "linear":
        return inner
    if spec.kind == "cosine":
        nx = np.linalg.norm(x, axis=1)
        ny = nx if symmetric else np.linalg.norm(y, axis=1)
        out = inner / np.outer(np.where(nx == 0, 1.0, nx), np.where(ny == 0, 1.0, ny))
        # zero-norm convention: 0 against anything, 1 against another zero vector
        zx = nx == 0
        zy = ny == 0
        if zx.any() or zy.any():
            out[zx, :] = 0.0
            out[:, zy] = 0.0
            out[np.ix_(zx, zy)] = 1.0
        if symmetric:
            np.fill_diagonal(out, 1.0)  # self-similarity, exactly
        return out
    if sigma is None:
        raise ValueError("rbf kernel needs a resolved sigma")
    if symmetric:
        # taking the squared norms from the Gram diagonal zeroes the
        # diagonal distances exactly
        rx = ry = np.diagonal(inner)
    else:
        rx = np.einsum("ij,ij->i", x, x)
        ry = np.einsum("ij,ij->i", y, y)
    d2 = rx[:, None] + ry[None, :] - 2.0 * inner
    np.clip(d2, 0.0, None, out=d2)
    return np.exp(-d2 / (2.0 * sigma**2))
