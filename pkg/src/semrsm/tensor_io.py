"""Loading, validation, centering and persistence of representation tensors.

The interchange format is NPY v1.0 (little-endian, C-order, float32 or
float64; float32 is promoted to float64 internally).  Accepted ranks:

* rank 4, N x C x W x H: spatial axes are merged into S = W*H
* rank 3, N x C x S: taken as-is
* rank 2, N x D: global embeddings, S = 1

An optional sidecar JSON next to the tensor (same stem, ``.json``
extension) carries ``sample_ids`` and ``group_ids``.  Absent sample ids
default to stringified indices.

Loaded batches are never mutated by this package and are safe to share
across threads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assignment import MatcherSpec
from .kernels import KernelSpec


class TensorIOError(Exception):
    """Base class for tensor/matrix I/O failures."""


class FormatError(TensorIOError):
    """File is not a well-formed NPY v1.0 float tensor."""


class ShapeError(TensorIOError):
    """Tensor rank or axis sizes violate the interchange contract."""


class ValidationError(TensorIOError):
    """Tensor content violates an invariant (non-finite values, bad ids)."""


@dataclass
class RepresentationBatch:
    """N samples x C channels x S spatial locations of activations."""

    data: np.ndarray
    sample_ids: list[str] | None = None
    group_ids: list[str] | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ShapeError(f"batch data must be rank 3 (N, C, S), got shape {self.data.shape}")
        if min(self.data.shape) < 1:
            raise ShapeError(f"all of N, C, S must be >= 1, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValidationError("batch contains non-finite values")
        n = self.data.shape[0]
        if self.sample_ids is not None:
            if len(self.sample_ids) != n:
                raise ValidationError(f"sample_ids has length {len(self.sample_ids)}, expected {n}")
            if len(set(self.sample_ids)) != n:
                raise ValidationError("sample_ids must be unique")
        if self.group_ids is not None and len(self.group_ids) != n:
            raise ValidationError(f"group_ids has length {len(self.group_ids)}, expected {n}")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def n_spatial(self) -> int:
        return self.data.shape[2]

    def flattened(self) -> np.ndarray:
        """Per-sample flattened C*S vectors, shape (N, C*S)."""
        return self.data.reshape(self.n_samples, -1)

    def ids(self) -> list[str]:
        """Sample ids, defaulting to stringified indices."""
        if self.sample_ids is not None:
            return list(self.sample_ids)
        return [str(i) for i in range(self.n_samples)]


@dataclass
class SimilarityMatrix:
    """Square-symmetric RSM or rectangular query x database matrix.

    ``row_groups``/``col_groups`` carry the group ids of the underlying
    samples (when known) so retrieval can exclude same-group entries.
    """

    values: np.ndarray
    kind: str = "square-symmetric"
    kernel: KernelSpec | None = None
    matcher: MatcherSpec | None = None
    row_ids: list[str] | None = None
    col_ids: list[str] | None = None
    row_groups: list[str] | None = None
    col_groups: list[str] | None = None

    _BOUND_SLACK = 1e-9

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ShapeError(f"matrix must be rank 2, got shape {self.values.shape}")
        if self.kind not in ("square-symmetric", "rectangular"):
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if not np.isfinite(self.values).all():
            raise ValidationError("matrix contains non-finite values")
        r, q = self.values.shape
        if self.kind == "square-symmetric":
            if r != q:
                raise ShapeError(f"square-symmetric matrix must be square, got {r}x{q}")
            if not np.array_equal(self.values, self.values.T):
                raise ValidationError("square-symmetric matrix is not exactly symmetric")
        if self.kernel is not None and self.kernel.kind in ("rbf", "cosine"):
            lo = -1.0 if self.kernel.kind == "cosine" else 0.0
            if self.values.min() < lo - self._BOUND_SLACK or \
                    self.values.max() > 1.0 + self._BOUND_SLACK:
                raise ValidationError(
                    f"{self.kernel.kind} entries outside [{lo}, 1] beyond slack: "
                    f"range [{self.values.min()}, {self.values.max()}]")
        for name, ids, expect in (("row_ids", self.row_ids, r), ("col_ids", self.col_ids, q),
                                  ("row_groups", self.row_groups, r),
                                  ("col_groups", self.col_groups, q)):
            if ids is not None and len(ids) != expect:
                raise ValidationError(f"{name} has length {len(ids)}, expected {expect}")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


def load_representations(path) -> RepresentationBatch:
    """Load an NPY activation tensor plus its optional metadata sidecar."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such file: {path}")
    try:
        raw = np.load(path, allow_pickle=False)
    except (ValueError, OSError, EOFError) as exc:
        raise FormatError(f"{path} is not a valid NPY file: {exc}") from exc
    if raw.dtype not in (np.float32, np.float64):
        raise FormatError(f"{path} has dtype {raw.dtype}; only float32/float64 are accepted")
    if raw.ndim == 4:
        n, c, w, h = raw.shape
        data = raw.reshape(n, c, w * h)
    elif raw.ndim == 3:
        data = raw
    elif raw.ndim == 2:
        data = raw[:, :, None]
    else:
        raise ShapeError(f"{path} has rank {raw.ndim}; expected rank 2, 3 or 4")

    sample_ids = None
    group_ids = None
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed sidecar {sidecar}: {exc}") from exc
        sample_ids = meta.get("sample_ids")
        group_ids = meta.get("group_ids")

    batch = RepresentationBatch(np.ascontiguousarray(data, dtype=np.float64),
                                sample_ids=sample_ids, group_ids=group_ids)
    if batch.sample_ids is None:
        batch.sample_ids = batch.ids()
    return batch


def center(batch: RepresentationBatch,
           external_mean: np.ndarray | None = None) -> tuple[RepresentationBatch, np.ndarray]:
    """Subtract the per-position mean over samples (or an external mean).

    Returns the centered batch together with the mean that was used, so a
    query batch can be centered with the database mean.
    """
    if external_mean is not None:
        mean = np.asarray(external_mean, dtype=np.float64)
        if mean.shape != batch.data.shape[1:]:
            raise ShapeError(
                f"external mean has shape {mean.shape}, expected {batch.data.shape[1:]}")
    else:
        mean = batch.data.mean(axis=0)
    centered = RepresentationBatch(batch.data - mean[None, :, :],
                                   sample_ids=batch.sample_ids, group_ids=batch.group_ids)
    return centered, mean


def save_matrix(matrix: SimilarityMatrix, path, format: str = "npy"):
    """Persist a similarity matrix as NPY (raw values), CSV or JSON."""
    path = Path(path)
    if format == "npy":
        np.save(path, matrix.values)
    elif format == "csv":
        cols = matrix.col_ids or [str(j) for j in range(matrix.n_cols)]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(cols)
            for row in matrix.values:
                writer.writerow([repr(float(v)) for v in row])
    elif format == "json":
        doc = {
            "values": matrix.values.tolist(),
            "kind": matrix.kind,
            "kernel": matrix.kernel.to_dict() if matrix.kernel else None,
            "matcher": matrix.matcher.to_dict() if matrix.matcher else None,
            "row_ids": matrix.row_ids,
            "col_ids": matrix.col_ids,
            "row_groups": matrix.row_groups,
            "col_groups": matrix.col_groups,
        }
        with open(path, "w") as f:
            json.dump(doc, f)
    else:
        raise ValueError(f"unknown matrix format {format!r}")


def load_matrix(path) -> SimilarityMatrix:
    """Load a matrix written by save_matrix (NPY or JSON)."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"no such file: {path}")
    if path.suffix == ".json":
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed matrix JSON {path}: {exc}") from exc
        return SimilarityMatrix(
            np.asarray(doc["values"], dtype=np.float64),
            kind=doc.get("kind", "rectangular"),
            kernel=KernelSpec.from_dict(doc["kernel"]) if doc.get("kernel") else None,
            matcher=MatcherSpec.from_dict(doc["matcher"]) if doc.get("matcher") else None,
            row_ids=doc.get("row_ids"), col_ids=doc.get("col_ids"),
            row_groups=doc.get("row_groups"), col_groups=doc.get("col_groups"))
    try:
        values = np.load(path, allow_pickle=False)
    except (ValueError, OSError, EOFError) as exc:
        raise FormatError(f"{path} is not a valid NPY file: {exc}") from exc
    if values.dtype not in (np.float32, np.float64):
        raise FormatError(f"{path} has dtype {values.dtype}; only float32/float64 are accepted")
    if values.ndim != 2:
        raise ShapeError(f"{path} has rank {values.ndim}; expected a matrix")
    r, q = values.shape
    kind = "square-symmetric" if r == q and np.array_equal(values, values.T) else "rectangular"
    return SimilarityMatrix(np.asarray(values, dtype=np.float64), kind=kind)
