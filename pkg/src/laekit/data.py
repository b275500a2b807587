"""Data matrices: synthesis, mean-centering, bias reduction, IDX ingestion."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectra import SpectralDecomposition, haar_orthogonal, svd

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

# Header fields larger than this are rejected as corrupt rather than
# attempting a multi-gigabyte allocation.
_IDX_DIM_LIMIT = 2**31 - 1


@dataclass(frozen=True)
class DataMatrix:
    """An m x n data matrix with its SVD and gram matrix cached.

    Columns are observations. Immutable after construction; shareable
    across threads. ``gram`` is ``X X^T`` and ``svd`` follows the
    conventions of :class:`~laekit.spectra.SpectralDecomposition`.
    """

    X: np.ndarray
    centered: bool
    svd: SpectralDecomposition = field(repr=False)
    gram: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, X, centered: bool = False) -> "DataMatrix":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"DataMatrix: expected a 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("DataMatrix: input contains non-finite entries")
        return cls(X=X, centered=centered, svd=svd(X), gram=X @ X.T)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def row_means(self) -> np.ndarray:
        return self.X.mean(axis=1)


def synthetic(m: int, n: int, spectrum, seed=0) -> DataMatrix:
    """Build an m x n matrix with prescribed singular values.

    Left and right singular vectors are Haar-uniform orthogonal, drawn
    deterministically from ``seed``. ``spectrum`` must be strictly
    descending and positive, with at most ``min(m, n)`` entries.
    """
    spectrum = np.atleast_1d(np.asarray(spectrum, dtype=float))
    r = spectrum.size
    if r == 0 or r > min(m, n):
        raise ValueError(f"synthetic: need 1 <= len(spectrum) <= min(m, n) = {min(m, n)}")
    if np.any(spectrum <= 0.0):
        raise ValueError("synthetic: spectrum must be positive")
    if np.any(np.diff(spectrum) >= 0.0):
        raise ValueError("synthetic: spectrum must be strictly descending")
    rng = np.random.default_rng(seed)
    U = haar_orthogonal(m, rng)
    V = haar_orthogonal(n, rng)
    X = (U[:, :r] * spectrum) @ V[:, :r].T
    return DataMatrix.from_array(X)


def mean_center(X) -> DataMatrix:
    """Subtract each row's mean: X - (1/n) X e e^T. Idempotent."""
    if isinstance(X, DataMatrix):
        X = X.X
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"mean_center: expected a 2-D array with n >= 1, got shape {X.shape}")
    return DataMatrix.from_array(X - X.mean(axis=1, keepdims=True), centered=True)


def optimal_bias(W1, W2, X) -> np.ndarray:
    """Reconstruction bias minimizing ||X - W2 W1 X - b e^T||_F^2.

    The minimizer is b = (I - W2 W1) mu with mu the row-mean vector, and at
    this b the biased loss equals the unbiased loss on mean-centered data.
    """
    W1 = np.asarray(W1, dtype=float)
    W2 = np.asarray(W2, dtype=float)
    X = X.X if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if W1.shape != W2.shape[::-1] or W2.shape[0] != X.shape[0]:
        raise ValueError(
            f"optimal_bias: inconsistent shapes W1 {W1.shape}, W2 {W2.shape}, X {X.shape}"
        )
    mu = X.mean(axis=1)
    return mu - W2 @ (W1 @ mu)


def _read_be32(raw: bytes, offset: int, what: str) -> int:
    if len(raw) < offset + 4:
        raise ValueError(
            f"load_idx: truncated header reading {what}: file ends at offset {len(raw)}, "
            f"need {offset + 4}"
        )
    return int.from_bytes(raw[offset:offset + 4], "big")


def _check_dim(value: int, offset: int, what: str) -> int:
    if value > _IDX_DIM_LIMIT:
        raise ValueError(f"load_idx: dimension overflow: {what}={value} at offset {offset}")
    return value


def load_idx(path) -> np.ndarray:
    """Load a big-endian IDX file (image or label flavor).

    Image files (magic 0x00000803) return an (rows*cols) x count matrix of
    floats scaled to [0, 1] by dividing by 255; one column per image. Label
    files (magic 0x00000801) return a 1 x count integer matrix.
    """
    raw = Path(path).read_bytes()
    magic = _read_be32(raw, 0, "magic")
    if magic == IDX_IMAGE_MAGIC:
        count = _check_dim(_read_be32(raw, 4, "item count"), 4, "item count")
        rows = _check_dim(_read_be32(raw, 8, "row count"), 8, "row count")
        cols = _check_dim(_read_be32(raw, 12, "column count"), 12, "column count")
        expected = count * rows * cols
        _check_dim(expected, 4, "pixel count")
        if len(raw) - 16 < expected:
            raise ValueError(
                f"load_idx: truncated payload at offset 16: expected {expected} bytes, "
                f"found {len(raw) - 16}"
            )
        pixels = np.frombuffer(raw, dtype=np.uint8, count=expected, offset=16)
        return pixels.reshape(count, rows * cols).T.astype(float) / 255.0
    if magic == IDX_LABEL_MAGIC:
        count = _check_dim(_read_be32(raw, 4, "item count"), 4, "item count")
        if len(raw) - 8 < count:
            raise ValueError(
                f"load_idx: truncated payload at offset 8: expected {count} bytes, "
                f"found {len(raw) - 8}"
            )
        labels = np.frombuffer(raw, dtype=np.uint8, count=count, offset=8)
        return labels.reshape(1, count).astype(np.int64)
    raise ValueError(f"load_idx: bad magic 0x{magic:08x} at offset 0")
