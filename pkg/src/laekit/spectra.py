"""Dense linear-algebra primitives with fixed ordering and sign conventions.

Every routine here is deterministic for a fixed input (tolerance-level, not
bitwise, across platforms) and pure: no shared mutable state, safe to call
from multiple threads.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralDecomposition:
    """Thin SVD ``A = U diag(s) V^T`` under the package conventions.

    Conventions:

    * singular values are non-increasing (strictly decreasing when the
      spectrum of the input is simple),
    * in each column of ``U`` the entry of largest absolute value (lowest
      row index on ties) is positive; the matching column of ``V`` is
      flipped along with it.
    """

    left_vectors: np.ndarray       # m x r, orthonormal columns
    singular_values: np.ndarray    # length r, non-increasing, >= 0
    right_vectors: np.ndarray      # n x r, orthonormal columns

    @property
    def U(self) -> np.ndarray:
        return self.left_vectors

    @property
    def s(self) -> np.ndarray:
        return self.singular_values

    @property
    def V(self) -> np.ndarray:
        return self.right_vectors

    @property
    def rank(self) -> int:
        """Number of singular values above 1e-12 relative to the largest."""
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s > 1e-12 * s[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def _normalize_signs(U: np.ndarray, V: np.ndarray) -> None:
    # Largest-|entry| pivot of each U column made positive, in place.
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0.0:
            U[:, j] *= -1.0
            V[:, j] *= -1.0


def svd(A) -> SpectralDecomposition:
    """Thin SVD with descending singular values and normalized column signs.

    Parameters
    ----------
    A : (m, n) array_like
        Real matrix with finite entries.

    Returns
    -------
    SpectralDecomposition
        Satisfies ``||A - U diag(s) V^T||_F <= 1e-10 ||A||_F``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"svd: expected a 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("svd: input contains non-finite entries")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    V = Vt.T.copy()
    U = U.copy()
    _normalize_signs(U, V)
    return SpectralDecomposition(U, s, V)


def pinv(A, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    ``tol`` is the relative cutoff: singular values below ``tol`` times the
    largest are treated as zero. The zero matrix maps to the zero matrix.
    """
    if tol <= 0.0:
        raise ValueError(f"pinv: tol must be positive, got {tol}")
    return np.linalg.pinv(np.asarray(A, dtype=float), rcond=tol)


def haar_orthogonal(m: int, seed=0) -> np.ndarray:
    """Draw an m x m orthogonal matrix uniformly (Haar measure).

    Built as the QR factorization of an i.i.d. standard-normal matrix with
    each Q column multiplied by the sign of the corresponding R diagonal,
    which removes the sign bias of plain QR. Deterministic per seed; ``seed``
    may be an int or a ``numpy.random.Generator``.
    """
    if m < 1:
        raise ValueError(f"haar_orthogonal: need m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    return Q * signs


def _check_symmetric(A: np.ndarray, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > 1e-8 * scale:
        raise ValueError(f"{name}: matrix is not symmetric")
    return A


def sym_sqrt(A, tol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of a symmetric positive-definite matrix."""
    A = _check_symmetric(A, "sym_sqrt")
    w, V = np.linalg.eigh(A)
    if w[-1] <= 0.0 or w[0] <= tol * w[-1]:
        raise ValueError("sym_sqrt: matrix is not positive definite")
    return (V * np.sqrt(w)) @ V.T


def sym_inv_sqrt(A, tol: float = 1e-12) -> np.ndarray:
    """Symmetric inverse square root R of an SPD matrix: R A R = I.

    Raises ``ValueError`` when the smallest eigenvalue is at or below
    ``tol`` times the largest (the inverse square root is then undefined).
    """
    A = _check_symmetric(A, "sym_inv_sqrt")
    w, V = np.linalg.eigh(A)
    if w[-1] <= 0.0 or w[0] <= tol * w[-1]:
        raise ValueError("sym_inv_sqrt: matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.T
