"""Oracles and diagnostics that confront parameters with the theory.

Finite-difference gradients, Hessian sign counts, singular-vector alignment
heatmaps, eigenvalue-shrinkage curves, and the unit-circle orthogonality
check. Nothing here renders anything; reports are plain data.
"""

from dataclasses import dataclass

import numpy as np

from . import model
from .data import DataMatrix
from .model import LaeParams, LossSpec
from .spectra import svd


def fd_grad(
    spec: LossSpec, p: LaeParams, data: DataMatrix, h: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient of the loss, entry by entry.

    Step defaults to 1e-5 * max(1, largest parameter magnitude). Agrees with
    the analytic gradient to max(1e-5 relative, 1e-7 absolute).
    """
    if h is None:
        scale = max(1.0, float(np.abs(p.W1).max()), float(np.abs(p.W2).max()))
        h = 1e-5 * scale
    if h <= 0.0:
        raise ValueError(f"fd_grad: step must be positive, got {h}")
    out = []
    for which in (0, 1):
        W = (p.W1, p.W2)[which]
        g = np.empty_like(W)
        for i in range(W.shape[0]):
            for j in range(W.shape[1]):
                Wp = W.copy()
                Wm = W.copy()
                Wp[i, j] += h
                Wm[i, j] -= h
                pp = LaeParams(Wp, p.W2) if which == 0 else LaeParams(p.W1, Wp)
                pm = LaeParams(Wm, p.W2) if which == 0 else LaeParams(p.W1, Wm)
                g[i, j] = (model.loss(spec, pp, data) - model.loss(spec, pm, data)) / (2.0 * h)
        out.append(g)
    return out[0], out[1]


def hessian_signature(H, zero_band: float = 1e-6) -> tuple[int, int, int]:
    """Eigenvalue sign counts (negative, zero, positive) of a symmetric matrix.

    Eigenvalues within ``zero_band`` times the spectral norm of zero count
    as zero. Rejects asymmetric input (tolerance 1e-8 relative).
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"hessian_signature: expected square matrix, got {H.shape}")
    scale = max(1.0, float(np.abs(H).max()))
    if np.abs(H - H.T).max() > 1e-8 * scale:
        raise ValueError("hessian_signature: matrix is not symmetric")
    mu = np.linalg.eigvalsh(0.5 * (H + H.T))
    spectral = float(np.abs(mu).max()) if mu.size else 0.0
    band = zero_band * spectral
    neg = int(np.sum(mu < -band))
    pos = int(np.sum(mu > band))
    return neg, mu.size - neg - pos, pos


@dataclass(frozen=True)
class QuadrantStats:
    offdiag_max_abs: float
    diag_min_abs: float
    aligned: bool


@dataclass(frozen=True)
class AlignmentReport:
    """Alignment of the data's principal directions with a trained product map.

    ``block_matrix`` is [U V*]^T [U U*] with U the data's left singular
    vectors and U*, Sigma*, V* the top-r SVD of W* = W2 W1 (r its numerical
    rank): quadrants U^T U, U^T U*, V*^T U, V*^T U*. ``decoder_aligned``
    (resp. ``encoder_aligned``) states that each column of U* (resp. V*)
    matches the same-position column of U up to sign above the threshold,
    i.e. the match is the identity, with no permutation allowed.
    """

    block_matrix: np.ndarray
    rank: int
    threshold: float
    data_vs_decoder: QuadrantStats     # U vs U*
    data_vs_encoder: QuadrantStats     # U vs V*
    decoder_vs_encoder: QuadrantStats  # U* vs V*

    @property
    def decoder_aligned(self) -> bool:
        return self.data_vs_decoder.aligned

    @property
    def encoder_aligned(self) -> bool:
        return self.data_vs_encoder.aligned


def _quadrant_stats(M: np.ndarray, threshold: float) -> QuadrantStats:
    # Columns are candidate matches for same-index rows; aligned means the
    # largest |entry| of every column sits on the diagonal and clears the
    # threshold.
    if M.size == 0:
        return QuadrantStats(0.0, 0.0, False)
    r = min(M.shape)
    A = np.abs(M)
    diag = np.diagonal(A)[:r]
    off = A.copy()
    for i in range(r):
        off[i, i] = 0.0
    aligned = True
    for j in range(M.shape[1]):
        i = int(np.argmax(A[:, j]))
        if i != j or A[i, j] <= threshold:
            aligned = False
            break
    return QuadrantStats(float(off.max()), float(diag.min()), aligned)


def alignment_report(data: DataMatrix, W_star, threshold: float = 0.98) -> AlignmentReport:
    """Build the four-quadrant singular-vector alignment report for W2 W1.

    At a sum- or product-loss global minimum the off-data quadrants are
    diagonal up to sign; at an unregularized minimum with a generic frame
    they are not. Entries always lie in [-1, 1] up to roundoff.
    """
    W_star = np.asarray(W_star, dtype=float)
    if W_star.shape != (data.m, data.m):
        raise ValueError(f"alignment_report: W_star must be m x m, got {W_star.shape}")
    U = data.svd.U
    d = svd(W_star)
    r = d.rank
    Ustar = d.U[:, :r]
    Vstar = d.V[:, :r]
    left = np.hstack([U, Vstar])
    right = np.hstack([U, Ustar])
    block = left.T @ right
    q12 = U.T @ Ustar
    q21t = (Vstar.T @ U).T
    q22 = Vstar.T @ Ustar
    return AlignmentReport(
        block_matrix=block,
        rank=r,
        threshold=threshold,
        data_vs_decoder=_quadrant_stats(q12, threshold),
        data_vs_encoder=_quadrant_stats(q21t, threshold),
        decoder_vs_encoder=_quadrant_stats(q22, threshold),
    )


@dataclass(frozen=True)
class ShrinkageReport:
    """Eigenvalue pairs (sigma_i^2, tau_i^2) with the theoretical tau^2.

    ``points`` rows are (sigma_sq, tau_sq, tau_sq_theory), one per data
    dimension in descending sigma order. tau^2 values are eigenvalues of the
    symmetrized W*; ``asymmetry`` records ||W* - W*^T||_F, which is zero at
    every sum-loss critical point and at rank-k minima of the other losses.
    """

    points: tuple[tuple[float, float, float], ...]
    asymmetry: float

    def max_relative_error(self) -> float:
        """Largest |tau^2 - theory| / theory over retained rows (theory > 0)."""
        errs = [
            abs(t - th) / th for _, t, th in self.points if th > 0.0
        ]
        return max(errs) if errs else 0.0


def shrinkage_theory(kind: str, sigma_sq: float, lam: float) -> float:
    """Theoretical tau^2 for one retained direction."""
    if kind == "unregularized":
        return 1.0
    if kind == "product":
        return 1.0 / (1.0 + lam / sigma_sq)
    if sigma_sq > lam:
        return 1.0 - lam / sigma_sq
    return 0.0


def shrinkage_points(
    data: DataMatrix, W_star, kind: str, lam: float, k: int | None = None
) -> ShrinkageReport:
    """Pair the data's eigenvalues with those of W* and the theory curve.

    ``k`` is the latent dimension defining the retained set {1..k}; when
    omitted it is inferred from the numerical rank of W*. Directions beyond
    the retained set (or with sigma^2 <= lam for the sum kind) have
    theoretical tau^2 = 0.
    """
    if kind not in model.KINDS:
        raise ValueError(f"shrinkage_points: unknown kind {kind!r}")
    W_star = np.asarray(W_star, dtype=float)
    if W_star.shape != (data.m, data.m):
        raise ValueError(f"shrinkage_points: W_star must be m x m, got {W_star.shape}")
    sym = 0.5 * (W_star + W_star.T)
    asymmetry = float(np.linalg.norm(W_star - W_star.T))
    tau_sq = np.sort(np.linalg.eigvalsh(sym))[::-1]
    s = data.svd.s
    sigma_sq = np.zeros(data.m)
    sigma_sq[: len(s)] = s**2
    if k is None:
        w_sv = np.linalg.svd(W_star, compute_uv=False)
        k = int(np.sum(w_sv > 1e-8 * max(1.0, w_sv[0]))) if w_sv.size else 0
    rows = []
    for i in range(data.m):
        retained = i < k and sigma_sq[i] > 0.0
        theory = shrinkage_theory(kind, sigma_sq[i], lam) if retained else 0.0
        rows.append((float(sigma_sq[i]), float(tau_sq[i]), float(theory)))
    return ShrinkageReport(points=tuple(rows), asymmetry=asymmetry)


@dataclass(frozen=True)
class UnitCircleReport:
    """Residuals of the latent change-of-basis maps built from a trained pair.

    A maps the latent space onto the top decoder directions rescaled by the
    square-root singular values of W* = W2 W1; B is the matching encoder map.
    AB = I holds at every critical point of every loss; A and B are each
    orthogonal exactly when the frame is, which the sum loss forces. For
    k = 2, ``circles`` holds the images of the unit circle under A, B, AB.
    """

    ab_residual: float
    a_orthogonality_residual: float
    b_orthogonality_residual: float
    circles: dict[str, np.ndarray] | None = None


def unit_circle_check(data: DataMatrix, p: LaeParams, circle_points: int = 0) -> UnitCircleReport:
    """Build A = S*^(-1/2) U*^T W2 and B = W1 U* S*^(-1/2); report residuals.

    U*, S* are the top-k left singular vectors/values of W* = W2 W1
    (top-k truncation). Raises when W* has numerical rank below k.
    """
    k = p.k
    d = svd(p.W2 @ p.W1)
    if d.rank < k:
        raise ValueError(f"unit_circle_check: W* has rank {d.rank} < k = {k}")
    U = d.U[:, :k]
    root = np.sqrt(d.s[:k])
    A = (U.T @ p.W2) / root[:, None]
    B = (p.W1 @ U) / root[None, :]
    eye = np.eye(k)
    report_circles = None
    if k == 2 and circle_points > 0:
        theta = np.linspace(0.0, 2.0 * np.pi, circle_points, endpoint=False)
        circle = np.vstack([np.cos(theta), np.sin(theta)])
        report_circles = {
            "circle": circle,
            "A": A @ circle,
            "B": B @ circle,
            "AB": (A @ B) @ circle,
        }
    return UnitCircleReport(
        ab_residual=float(np.linalg.norm(A @ B - eye)),
        a_orthogonality_residual=float(np.linalg.norm(A.T @ A - eye)),
        b_orthogonality_residual=float(np.linalg.norm(B @ B.T - eye)),
        circles=report_circles,
    )


def principal_angles(basis_a, basis_b) -> np.ndarray:
    """Principal angles (radians, ascending) between two column spans."""
    A = np.linalg.qr(np.asarray(basis_a, dtype=float))[0]
    B = np.linalg.qr(np.asarray(basis_b, dtype=float))[0]
    cosines = np.clip(np.linalg.svd(A.T @ B, compute_uv=False), -1.0, 1.0)
    return np.arccos(cosines)
