"""Closed-form critical points of the three losses and their local curvature.

Every critical point of each loss is indexed by a subset of principal
directions plus a frame: a full-column-rank matrix G for the unregularized
and product losses (whose symmetry group is the invertible k x k matrices)
or an orthonormal-column matrix O for the sum loss (whose symmetry group
shrinks to the orthogonal group). This module materializes those points,
computes the analytic descending/flat/ascending counts of the Hessian at
each of them, builds a finite-difference Hessian oracle, and maps sum-loss
decoders to the matching probabilistic-PCA weights.
"""

from dataclasses import dataclass

import numpy as np

from . import model
from .data import DataMatrix
from .grassmann import morse_index
from .model import KINDS, LaeParams, LossSpec
from .spectra import pinv, haar_orthogonal, sym_sqrt


@dataclass(frozen=True)
class CriticalSpec:
    """Coordinates of one critical manifold point: kind, index set, frame.

    ``index_set`` holds 1-based principal-direction indices, strictly
    increasing, of size l <= k. ``frame`` is k x l: orthonormal columns for
    the sum kind, full column rank otherwise.
    """

    kind: str
    index_set: tuple[int, ...]
    frame: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"CriticalSpec: unknown kind {self.kind!r}")
        idx = tuple(int(i) for i in self.index_set)
        object.__setattr__(self, "index_set", idx)
        if any(i < 1 for i in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"CriticalSpec: index set must be strictly increasing, >= 1: {idx}")
        F = np.asarray(self.frame, dtype=float)
        object.__setattr__(self, "frame", F)
        if F.ndim != 2:
            raise ValueError("CriticalSpec: frame must be 2-D (k x l)")
        k, ell = F.shape
        if ell != len(idx):
            raise ValueError(f"CriticalSpec: frame has {ell} columns but index set has {len(idx)}")
        if ell > k:
            raise ValueError(f"CriticalSpec: need l <= k, got frame shape {F.shape}")
        if ell == 0:
            return
        if self.kind == "sum":
            if np.abs(F.T @ F - np.eye(ell)).max() > 1e-10:
                raise ValueError("CriticalSpec: sum-kind frame must have orthonormal columns")
        else:
            sv = np.linalg.svd(F, compute_uv=False)
            if sv[-1] <= 1e-10 * sv[0]:
                raise ValueError("CriticalSpec: frame is rank deficient")

    @property
    def k(self) -> int:
        return self.frame.shape[0]

    @property
    def ell(self) -> int:
        return self.frame.shape[1]


@dataclass(frozen=True)
class CurvatureSignature:
    """Counts of descending / flat / ascending directions at a critical point."""

    descending: int
    flat: int
    ascending: int

    @property
    def total(self) -> int:
        return self.descending + self.flat + self.ascending


def _retained(data: DataMatrix, index_set: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    s = data.svd.s
    if index_set and index_set[-1] > len(s):
        raise ValueError(f"index {index_set[-1]} exceeds the {len(s)} available singular values")
    idx = np.asarray(index_set, dtype=int) - 1
    return data.svd.U[:, idx], s[idx]


def critical_point(spec: CriticalSpec, data: DataMatrix, lam: float = 0.0) -> LaeParams:
    """Materialize the critical point (W1, W2) for a spec and weight.

    The decoder retains the selected principal directions, scaled per kind:
    unchanged (unregularized), shrunk by (1 + lam/sigma^2)^(-1/2) (product),
    or by (1 - lam/sigma^2)^(1/2) (sum, where W1 equals W2^T exactly). The
    frame parameterizes the remaining symmetry of each loss.
    """
    U_I, sig = _retained(data, spec.index_set)
    k, ell = spec.k, spec.ell
    m = data.m
    if spec.kind == "sum":
        s_all = data.svd.s
        degenerate = np.abs(s_all**2 - lam) < 1e-9 * s_all**2
        if np.any(degenerate):
            bad = int(np.argmax(degenerate)) + 1
            raise ValueError(
                f"degenerate lam: lam={lam} matches squared singular value {bad} "
                f"({s_all[bad - 1] ** 2:.6g})"
            )
        if np.any(sig**2 <= lam):
            pos = int(np.argmax(sig**2 <= lam))
            raise ValueError(
                f"direction collapsed by regularization: sigma_{spec.index_set[pos]}^2 = "
                f"{sig[pos] ** 2:.6g} <= lam = {lam}"
            )
    if ell == 0:
        return LaeParams(np.zeros((k, m)), np.zeros((m, k)))
    if spec.kind == "unregularized":
        W2 = U_I @ pinv(spec.frame)
        W1 = spec.frame @ U_I.T
    elif spec.kind == "product":
        c = 1.0 / np.sqrt(1.0 + lam / sig**2)
        W2 = (U_I * c) @ pinv(spec.frame)
        W1 = (spec.frame * c) @ U_I.T
    else:
        c = np.sqrt(1.0 - lam / sig**2)
        W1 = (spec.frame * c) @ U_I.T
        W2 = W1.T.copy()
    return LaeParams(W1, W2)


def prop1_critical(D, S, index_set, G) -> tuple[np.ndarray, np.ndarray]:
    """Critical points of the diagonal core loss.

    For diagonal D and invertible diagonal S with the diagonal of
    D^2 S^-2 D^2 distinct and nonzero, the critical points of

        tr(Q2 Q1 S^2 Q1^T Q2^T - 2 Q2 Q1 D^2)

    are indexed by a subset and a full-rank frame G:
    Q1 places the columns of G, scaled by d_i/s_i, into the selected rows;
    Q2 does the same with the rows of pinv(G).
    """
    D = np.asarray(D, dtype=float)
    S = np.asarray(S, dtype=float)
    G = np.asarray(G, dtype=float)
    for name, A in (("D", D), ("S", S)):
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"prop1_critical: {name} must be square, got {A.shape}")
        if np.any(A - np.diag(np.diag(A))):
            raise ValueError(f"prop1_critical: {name} must be diagonal")
    m = D.shape[0]
    if S.shape[0] != m:
        raise ValueError("prop1_critical: D and S must have the same size")
    d = np.diag(D)
    s = np.diag(S)
    if np.any(s == 0.0):
        raise ValueError("prop1_critical: S must be invertible")
    t = d**2 / s**2 * d**2
    if np.any(t == 0.0) or len(np.unique(t)) != m:
        raise ValueError("prop1_critical: diagonal of D^2 S^-2 D^2 must be distinct and nonzero")
    idx = tuple(int(i) for i in index_set)
    if any(i < 1 or i > m for i in idx) or any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"prop1_critical: bad index set {idx}")
    if G.ndim != 2 or G.shape[1] != len(idx):
        raise ValueError(f"prop1_critical: frame shape {G.shape} does not match index set {idx}")
    k = G.shape[0]
    ell = len(idx)
    if ell == 0:
        return np.zeros((k, m)), np.zeros((m, k))
    sv = np.linalg.svd(G, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise ValueError("prop1_critical: frame is rank deficient")
    rows = np.asarray(idx, dtype=int) - 1
    scale = d[rows] / s[rows]
    Q1 = np.zeros((k, m))
    Q1[:, rows] = G * scale
    Q2 = np.zeros((m, k))
    Q2[rows, :] = pinv(G) * scale[:, None]
    return Q1, Q2


def m0(spectrum, lam: float) -> int:
    """Largest index whose squared singular value exceeds lam (0 if none)."""
    s = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if np.any(s <= 0.0) or np.any(np.diff(s) >= 0.0):
        raise ValueError("m0: spectrum must be strictly descending and positive")
    return int(np.sum(s**2 > lam))


def global_minimum(
    kind: str, data: DataMatrix, k: int, lam: float = 0.0, frame_seed=None
) -> CriticalSpec:
    """Spec of a global minimum: the top feasible indices with a seeded frame.

    The sum loss retains only directions with sigma^2 > lam; the other kinds
    retain the top k. ``frame_seed=None`` gives the identity-padded frame,
    otherwise a Haar-orthonormal one.
    """
    if kind not in KINDS:
        raise ValueError(f"global_minimum: unknown kind {kind!r}")
    if k > data.m:
        raise ValueError(f"global_minimum: need k <= m, got k={k}, m={data.m}")
    rank = data.svd.rank
    if kind == "sum":
        ell = min(k, m0(data.svd.s[:rank], lam))
    else:
        ell = min(k, rank)
    if frame_seed is None:
        frame = np.eye(k)[:, :ell]
    else:
        frame = haar_orthogonal(k, frame_seed)[:, :ell]
    return CriticalSpec(kind, tuple(range(1, ell + 1)), frame)


def ppca_from_decoder(W2, data: DataMatrix) -> np.ndarray:
    """Map a sum-loss critical decoder to the matching pPCA weight matrix.

    Left-multiplies by (X X^T)^(1/2). At a sum-kind critical decoder with
    weight lam this equals the pPCA weights with noise variance lam: the
    retained directions scaled by sigma_i (1 - lam/sigma_i^2)^(1/2).
    """
    W2 = np.asarray(W2, dtype=float)
    if W2.ndim != 2 or W2.shape[0] != data.m:
        raise ValueError(f"ppca_from_decoder: decoder shape {W2.shape} incompatible with data")
    s = data.svd.s
    if len(s) < data.m or s[-1] <= 1e-12 * s[0]:
        raise ValueError("ppca_from_decoder: data gram is singular")
    return sym_sqrt(data.gram) @ W2


def curvature_signature(kind: str, index_set, m: int, k: int) -> CurvatureSignature:
    """Hessian sign counts at the critical manifold of an index set.

    Descending directions: the Morse count of the index set plus
    (k - l)(m - l) for scaling an unused frame slot toward an unused
    principal direction. Flat directions for the sum kind span exactly the
    critical manifold: k*l - l(l+1)/2, the dimension of the orthonormal
    l-frames in R^k. For the unregularized and product kinds the Hessian
    kernel is larger than the k*l-dimensional critical manifold whenever
    0 < l < k: rotating the rank-carrying latent subspace adds l(k - l)
    directions along which the loss is flat to second order and grows only
    quartically. The rest ascend at second order. Assumes no direction is
    collapsed by the regularization weight (sigma_i^2 > lam throughout).
    """
    if kind not in KINDS:
        raise ValueError(f"curvature_signature: unknown kind {kind!r}")
    idx = tuple(int(i) for i in index_set)
    ell = len(idx)
    if not ell <= k <= m:
        raise ValueError(f"curvature_signature: need l <= k <= m, got l={ell}, k={k}, m={m}")
    if idx and idx[-1] > m:
        raise ValueError(f"curvature_signature: index {idx[-1]} out of range for m={m}")
    d = morse_index(idx, ell)
    descending = d + (k - ell) * (m - ell)
    if kind == "sum":
        flat = k * ell - ell * (ell + 1) // 2
    else:
        flat = k * ell + ell * (k - ell)
    ascending = 2 * k * m - descending - flat
    return CurvatureSignature(descending, flat, ascending)


def pack_params(p: LaeParams) -> np.ndarray:
    """Flatten (W1, W2) into one vector, W1 entries first."""
    return np.concatenate([p.W1.ravel(), p.W2.ravel()])


def unpack_params(x: np.ndarray, m: int, k: int) -> LaeParams:
    W1 = x[: k * m].reshape(k, m)
    W2 = x[k * m:].reshape(m, k)
    return LaeParams(W1, W2)


def numerical_hessian(
    spec: LossSpec, p: LaeParams, data: DataMatrix, step: float | None = None
) -> np.ndarray:
    """Symmetrized central-difference Hessian of the loss, 2km x 2km.

    Differentiates the analytic gradient; parameter order matches
    :func:`pack_params`.
    """
    x0 = pack_params(p)
    n = x0.size
    h = step if step is not None else 1e-4 * max(1.0, float(np.abs(x0).max()))
    if h <= 0.0:
        raise ValueError(f"numerical_hessian: step must be positive, got {h}")
    H = np.empty((n, n))
    for j in range(n):
        x = x0.copy()
        x[j] = x0[j] + h
        gp = model.grad(spec, unpack_params(x, p.m, p.k), data)
        x[j] = x0[j] - h
        gm = model.grad(spec, unpack_params(x, p.m, p.k), data)
        H[:, j] = (np.concatenate([gp[0].ravel(), gp[1].ravel()])
                   - np.concatenate([gm[0].ravel(), gm[1].ravel()])) / (2.0 * h)
    return 0.5 * (H + H.T)
