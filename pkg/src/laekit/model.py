"""Linear-autoencoder losses, exact gradients, and derived special forms.

Three loss functions on an encoder/decoder pair (W1, W2):

* unregularized:  ||X - W2 W1 X||_F^2
* product:        adds  lam ||W2 W1||_F^2
* sum:            adds  lam (||W1||_F^2 + ||W2||_F^2)

All values and gradients are computed through the cached m x m gram matrix
X X^T, so the cost is independent of the number of observations.
"""

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix

KINDS = ("unregularized", "product", "sum")


@dataclass(frozen=True)
class LaeParams:
    """Encoder W1 (k x m) and decoder W2 (m x k), with k <= m."""

    W1: np.ndarray
    W2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W1", np.asarray(self.W1, dtype=float))
        object.__setattr__(self, "W2", np.asarray(self.W2, dtype=float))
        if self.W1.ndim != 2 or self.W2.ndim != 2:
            raise ValueError("LaeParams: W1 and W2 must be 2-D")
        k, m = self.W1.shape
        if self.W2.shape != (m, k):
            raise ValueError(
                f"LaeParams: W2 shape {self.W2.shape} does not match W1 shape {self.W1.shape}"
            )
        if k > m:
            raise ValueError(f"LaeParams: need k <= m, got k={k}, m={m}")

    @property
    def k(self) -> int:
        return self.W1.shape[0]

    @property
    def m(self) -> int:
        return self.W1.shape[1]

    def product(self) -> np.ndarray:
        """The composed map W2 W1 (m x m)."""
        return self.W2 @ self.W1

    def transpose_gap(self) -> float:
        """||W1 - W2^T||_F^2, zero at every critical point of the sum loss."""
        return float(np.sum((self.W1 - self.W2.T) ** 2))


@dataclass(frozen=True)
class LossSpec:
    """Loss kind plus its regularization weight.

    ``dae_noise_var`` (s^2) and ``cae_gamma`` tag the derived noisy and
    contractive forms; they do not enter :func:`loss` directly.
    """

    kind: str
    lam: float = 0.0
    dae_noise_var: float | None = None
    cae_gamma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"LossSpec: unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.lam < 0.0:
            raise ValueError(f"LossSpec: lam must be nonnegative, got {self.lam}")
        if self.kind in ("product", "sum") and self.lam <= 0.0:
            raise ValueError(f"LossSpec: kind {self.kind!r} requires lam > 0")
        if self.dae_noise_var is not None and self.dae_noise_var < 0.0:
            raise ValueError("LossSpec: dae_noise_var must be nonnegative")
        if self.cae_gamma is not None and self.cae_gamma < 0.0:
            raise ValueError("LossSpec: cae_gamma must be nonnegative")


def _check_shapes(p: LaeParams, data: DataMatrix) -> None:
    if p.m != data.m:
        raise ValueError(f"params are for m={p.m} but data has m={data.m}")


def reconstruction_loss(p: LaeParams, data: DataMatrix) -> float:
    """||X - W2 W1 X||_F^2 via the gram matrix."""
    _check_shapes(p, data)
    E = np.eye(data.m) - p.W2 @ p.W1
    val = float(np.sum((E @ data.gram) * E))
    return max(val, 0.0)


def loss(spec: LossSpec, p: LaeParams, data: DataMatrix) -> float:
    """Evaluate the configured loss. Always nonnegative."""
    rec = reconstruction_loss(p, data)
    if spec.kind == "unregularized":
        return rec
    if spec.kind == "product":
        W = p.W2 @ p.W1
        return rec + spec.lam * float(np.sum(W * W))
    return rec + spec.lam * (float(np.sum(p.W1**2)) + float(np.sum(p.W2**2)))


def grad(spec: LossSpec, p: LaeParams, data: DataMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient pair (d/dW1, d/dW2) of :func:`loss`.

    The reconstruction part is 2 W2^T (W2 W1 - I) XX^T for W1 and
    2 (W2 W1 - I) XX^T W1^T for W2; the regularization part depends on the
    kind. Matches central finite differences to 1e-5 relative.
    """
    _check_shapes(p, data)
    W1, W2 = p.W1, p.W2
    R = (W2 @ W1 - np.eye(data.m)) @ data.gram
    g1 = 2.0 * W2.T @ R
    g2 = 2.0 * R @ W1.T
    if spec.kind == "sum":
        g1 += 2.0 * spec.lam * W1
        g2 += 2.0 * spec.lam * W2
    elif spec.kind == "product":
        g1 += 2.0 * spec.lam * W2.T @ W2 @ W1
        g2 += 2.0 * spec.lam * W2 @ W1 @ W1.T
    return g1, g2


def grad_norm(spec: LossSpec, p: LaeParams, data: DataMatrix) -> float:
    g1, g2 = grad(spec, p, data)
    return float(np.sqrt(np.sum(g1**2) + np.sum(g2**2)))


def dae_expected_loss(p: LaeParams, data: DataMatrix, s2: float) -> float:
    """Expected reconstruction loss under additive input noise of variance s2.

    Equals the product loss with lam = n * s2: corrupting the input with
    zero-mean i.i.d. noise contributes n * s2 * ||W2 W1||_F^2 in expectation.
    """
    if s2 < 0.0:
        raise ValueError(f"dae_expected_loss: s2 must be nonnegative, got {s2}")
    W = p.W2 @ p.W1
    return reconstruction_loss(p, data) + data.n * s2 * float(np.sum(W * W))


def cae_tied_loss(W1, data: DataMatrix, gamma: float) -> float:
    """Contractive loss with tied weights: encoder-Jacobian penalty gamma.

    Identical to the sum loss at (W1, W1^T) with lam = gamma / 2.
    """
    if gamma < 0.0:
        raise ValueError(f"cae_tied_loss: gamma must be nonnegative, got {gamma}")
    W1 = np.asarray(W1, dtype=float)
    p = LaeParams(W1, W1.T.copy())
    return reconstruction_loss(p, data) + gamma * float(np.sum(W1**2))


@dataclass(frozen=True)
class ScalarMinima:
    """Global minima of a scalar (m = n = k = 1) loss.

    Isolated minima are listed in ``points``; one-dimensional minimum
    manifolds are described by the constraint w2 * w1 = ``product_value``.
    """

    kind: str
    points: tuple[tuple[float, float], ...] | None = None
    product_value: float | None = None


def scalar_minima(kind: str, x2: float, lam: float) -> ScalarMinima:
    """Closed-form global minima of the scalar losses for data power x2.

    * unregularized: the hyperbola w2 w1 = 1
    * product: the hyperbola w2 w1 = (1 + lam/x2)^-1
    * sum, lam < x2: the two points w1 = w2 = +-sqrt(1 - lam/x2)
    * sum, lam >= x2: the origin only
    """
    if kind not in KINDS:
        raise ValueError(f"scalar_minima: unknown kind {kind!r}")
    if x2 <= 0.0:
        raise ValueError(f"scalar_minima: x2 must be positive, got {x2}")
    if kind == "unregularized":
        return ScalarMinima(kind, product_value=1.0)
    if kind == "product":
        return ScalarMinima(kind, product_value=1.0 / (1.0 + lam / x2))
    if lam < x2:
        w = float(np.sqrt(1.0 - lam / x2))
        return ScalarMinima(kind, points=((w, w), (-w, -w)))
    return ScalarMinima(kind, points=((0.0, 0.0),))
