"""Optimizers for the three losses and PCA recovery from a trained decoder.

Full-batch training throughout: the data enters only through its m x m gram
matrix, so one epoch costs the same for ten or ten million observations.
A run is single threaded and deterministic per seed; independent runs may
execute in parallel.
"""

from dataclasses import dataclass, field

import numpy as np

from . import model
from .data import DataMatrix
from .model import KINDS, LaeParams, LossSpec

OPTIMIZERS = ("gd", "adam", "tied_gd", "als")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Gradient norm below this multiple of (||XX^T||_F + lam) counts as converged.
CONVERGENCE_RTOL = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer selection and hyperparameters for one training run."""

    kind: str = "sum"
    lam: float = 10.0
    optimizer: str = "adam"
    learning_rate: float = 0.05
    epochs: int = 4000
    init_scale: float = 0.1
    seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"TrainConfig: unknown kind {self.kind!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"TrainConfig: unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"TrainConfig: learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"TrainConfig: epochs must be >= 1, got {self.epochs}")
        if self.init_scale <= 0.0:
            raise ValueError(f"TrainConfig: init_scale must be positive, got {self.init_scale}")
        if self.record_every < 1:
            raise ValueError(f"TrainConfig: record_every must be >= 1, got {self.record_every}")
        if self.kind in ("product", "sum") and self.lam <= 0.0:
            raise ValueError(f"TrainConfig: kind {self.kind!r} requires lam > 0")

    def loss_spec(self) -> LossSpec:
        return LossSpec(self.kind, self.lam if self.kind != "unregularized" else 0.0)


@dataclass
class TrainTrace:
    """Per-recorded-epoch loss, transpose gap, and gradient norm."""

    epochs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    loss: np.ndarray = field(default_factory=lambda: np.empty(0))
    transpose_gap: np.ndarray = field(default_factory=lambda: np.empty(0))
    grad_norm: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def final_grad_norm(self) -> float:
        return float(self.grad_norm[-1])

    @property
    def final_loss(self) -> float:
        return float(self.loss[-1])

    @property
    def final_transpose_gap(self) -> float:
        return float(self.transpose_gap[-1])


def gd_step(p: LaeParams, data: DataMatrix, lam: float, alpha: float) -> LaeParams:
    """One simultaneous half-gradient descent step on the sum loss.

    Both updates use the pre-step values:

        W1 -= alpha (W2^T (W2 W1 - I) XX^T + lam W1)
        W2 -= alpha ((W2 W1 - I) XX^T W1^T + lam W2)

    These are the printed gradients divided by two, so the step equals plain
    gradient descent at rate alpha/2.
    """
    if alpha <= 0.0:
        raise ValueError(f"gd_step: alpha must be positive, got {alpha}")
    R = (p.W2 @ p.W1 - np.eye(data.m)) @ data.gram
    W1 = p.W1 - alpha * (p.W2.T @ R + lam * p.W1)
    W2 = p.W2 - alpha * (R @ p.W1.T + lam * p.W2)
    return LaeParams(W1, W2)


def tied_step(w, data: DataMatrix, lam: float, alpha: float) -> np.ndarray:
    """One ascent step of the tied parameterization W2 = w, W1 = w^T.

    The update direction is the decoder-side half gradient evaluated on the
    tied set, (I - w w^T) XX^T w - lam w; for k = 1 and lam = 0 this is
    exactly the classical neural PCA update alpha (x y - w y^2) with
    y = x^T w, summed over data columns.
    """
    if alpha <= 0.0:
        raise ValueError(f"tied_step: alpha must be positive, got {alpha}")
    w = np.asarray(w, dtype=float)
    Gw = data.gram @ w
    return w + alpha * (Gw - w @ (w.T @ Gw) - lam * w)


def als_solve(p: LaeParams, data: DataMatrix, lam: float, which: str) -> LaeParams:
    """Exactly re-solve one parameter of the sum loss, holding the other fixed.

    The loss is convex in each parameter separately. The encoder solve is the
    stationarity system (W2^T W2) W1 (XX^T) + lam W1 = W2^T XX^T, diagonalized
    in the eigenbases of its two coefficient matrices; the decoder solve is a
    plain k x k linear system. After the solve the matching gradient block
    vanishes. Raises on a singular system (possible only at lam = 0 with a
    rank-deficient partner).
    """
    if which not in ("encoder", "decoder"):
        raise ValueError(f"als_solve: which must be 'encoder' or 'decoder', got {which!r}")
    if lam < 0.0:
        raise ValueError(f"als_solve: lam must be nonnegative, got {lam}")
    G = data.gram
    if which == "encoder":
        # (W2^T W2) W1 (XX^T) + lam W1 = W2^T XX^T, diagonalized in the
        # eigenbases of the two coefficient matrices.
        a, P = np.linalg.eigh(p.W2.T @ p.W2)
        g, Q = np.linalg.eigh(G)
        denom = a[:, None] * g[None, :] + lam
        if np.any(np.abs(denom) <= 1e-14 * max(1.0, float(np.abs(a).max() * np.abs(g).max()))):
            raise ValueError("als_solve: singular encoder system (lam = 0 with rank-deficient partner)")
        C = P.T @ (p.W2.T @ G) @ Q
        W1 = P @ (C / denom) @ Q.T
        return LaeParams(W1, p.W2)
    M = p.W1 @ G @ p.W1.T + lam * np.eye(p.k)
    try:
        W2 = np.linalg.solve(M.T, (G @ p.W1.T).T).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("als_solve: singular decoder system") from exc
    return LaeParams(p.W1, W2)


def _init_params(m: int, k: int, scale: float, rng) -> LaeParams:
    return LaeParams(rng.normal(0.0, scale, (k, m)), rng.normal(0.0, scale, (m, k)))


def train(config: TrainConfig, data: DataMatrix, k: int) -> tuple[LaeParams, TrainTrace]:
    """Run the configured optimizer; returns final params and the trace.

    Deterministic per seed. Stops early once the gradient norm drops below
    1e-9 (||XX^T||_F + lam); raises if the loss becomes non-finite, naming
    the epoch. ``tied_gd`` and ``als`` only support the sum family (any
    lam >= 0 for tied_gd, lam > 0 for als).
    """
    if k < 1 or k > data.m:
        raise ValueError(f"train: need 1 <= k <= m, got k={k}, m={data.m}")
    if config.optimizer in ("tied_gd", "als") and config.kind == "product":
        raise ValueError(f"train: optimizer {config.optimizer!r} supports only the sum family")
    spec = config.loss_spec()
    lam = spec.lam
    rng = np.random.default_rng(config.seed)
    p = _init_params(data.m, k, config.init_scale, rng)
    w = p.W2.copy()  # tied_gd state
    if config.optimizer == "tied_gd":
        p = LaeParams(w.T.copy(), w)

    threshold = CONVERGENCE_RTOL * (float(np.linalg.norm(data.gram)) + lam)
    adam_m = [np.zeros_like(p.W1), np.zeros_like(p.W2)]
    adam_v = [np.zeros_like(p.W1), np.zeros_like(p.W2)]

    epochs_rec, loss_rec, gap_rec, gn_rec = [], [], [], []

    def record(epoch: int) -> float:
        gn = model.grad_norm(spec, p, data)
        epochs_rec.append(epoch)
        loss_rec.append(model.loss(spec, p, data))
        gap_rec.append(p.transpose_gap())
        gn_rec.append(gn)
        return gn

    record(0)
    for epoch in range(1, config.epochs + 1):
        if config.optimizer == "gd":
            p = gd_step_any(spec, p, data, config.learning_rate)
        elif config.optimizer == "adam":
            g = model.grad(spec, p, data)
            t = epoch
            new = []
            for i, (theta, gi) in enumerate(zip((p.W1, p.W2), g)):
                adam_m[i] = ADAM_BETA1 * adam_m[i] + (1 - ADAM_BETA1) * gi
                adam_v[i] = ADAM_BETA2 * adam_v[i] + (1 - ADAM_BETA2) * gi**2
                mhat = adam_m[i] / (1 - ADAM_BETA1**t)
                vhat = adam_v[i] / (1 - ADAM_BETA2**t)
                new.append(theta - config.learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS))
            p = LaeParams(new[0], new[1])
        elif config.optimizer == "tied_gd":
            w = tied_step(w, data, lam, config.learning_rate)
            p = LaeParams(w.T.copy(), w)
        else:
            p = als_solve(p, data, lam, "encoder")
            p = als_solve(p, data, lam, "decoder")

        if not (np.all(np.isfinite(p.W1)) and np.all(np.isfinite(p.W2))):
            raise ValueError(f"train: loss diverged (non-finite) at epoch {epoch}")
        should_record = epoch % config.record_every == 0 or epoch == config.epochs
        if should_record:
            current = record(epoch)
            if not np.isfinite(loss_rec[-1]):
                raise ValueError(f"train: loss diverged (non-finite) at epoch {epoch}")
            if current < threshold:
                break

    trace = TrainTrace(
        epochs=np.asarray(epochs_rec, dtype=int),
        loss=np.asarray(loss_rec),
        transpose_gap=np.asarray(gap_rec),
        grad_norm=np.asarray(gn_rec),
    )
    return p, trace


def gd_step_any(spec: LossSpec, p: LaeParams, data: DataMatrix, alpha: float) -> LaeParams:
    """Half-gradient descent step for any loss kind (gd_step generalized)."""
    g1, g2 = model.grad(spec, p, data)
    return LaeParams(p.W1 - 0.5 * alpha * g1, p.W2 - 0.5 * alpha * g2)


@dataclass(frozen=True)
class PcaRecovery:
    """Principal directions and eigenvalue estimates read off a decoder.

    ``eigenvalues[i]`` is NaN where ``collapsed[i]`` is True: a decoder
    singular value at numerical zero carries no eigenvalue information.
    """

    directions: np.ndarray      # m x k, orthonormal columns
    eigenvalues: np.ndarray     # length k, NaN at collapsed slots
    collapsed: np.ndarray       # length k, bool

    @property
    def n_collapsed(self) -> int:
        return int(self.collapsed.sum())


def recover_pca(W2, lam: float, zero_tol: float = 1e-8) -> PcaRecovery:
    """Read principal directions and eigenvalues from a sum-loss decoder.

    The decoder's left singular vectors are the principal directions; each
    retained eigenvalue is lam / (1 - s_i^2), inverting the shrinkage
    s_i = (1 - lam/sigma_i^2)^(1/2). Requires every decoder singular value
    below one; components with s_i at numerical zero are reported collapsed.
    """
    from .spectra import svd as _svd

    W2 = np.asarray(W2, dtype=float)
    if W2.ndim != 2:
        raise ValueError("recover_pca: decoder must be 2-D")
    dec = _svd(W2)
    s = dec.s
    if np.any(s >= 1.0):
        raise ValueError(
            f"recover_pca: decoder singular value {s.max():.6g} >= 1; not a sum-loss decoder"
        )
    collapsed = s <= zero_tol
    eigenvalues = np.full(s.shape, np.nan)
    eigenvalues[~collapsed] = lam / (1.0 - s[~collapsed] ** 2)
    return PcaRecovery(directions=dec.U, eigenvalues=eigenvalues, collapsed=collapsed)


def minibatch_adam(
    X,
    k: int,
    kind: str,
    lam: float,
    epochs: int = 100,
    batch_size: int = 32,
    learning_rate: float = 0.05,
    seed: int = 0,
    anneal: bool = False,
) -> LaeParams:
    """Minibatch Adam on raw data columns: the large-image-dataset recipe.

    Shuffles columns each epoch and steps on per-batch gradients (the
    regularization term is scaled by the batch fraction so that the epoch
    total matches the full-batch objective). Moments persist across epochs.
    With ``anneal`` the rate decays geometrically to 1/30 of its initial
    value over the second half of training, shrinking the stochastic noise
    floor around the minimum.
    """
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    spec = LossSpec(kind, lam if kind != "unregularized" else 0.0)
    rng = np.random.default_rng(seed)
    W1 = rng.normal(0.0, 0.1, (k, m))
    W2 = rng.normal(0.0, 0.1, (m, k))
    mom = [np.zeros_like(W1), np.zeros_like(W2)]
    vel = [np.zeros_like(W1), np.zeros_like(W2)]
    t = 0
    base_rate = learning_rate
    for epoch in range(epochs):
        if anneal and epoch >= epochs // 2:
            frac_done = (epoch - epochs // 2) / max(1, epochs - epochs // 2)
            learning_rate = base_rate * 30.0 ** (-frac_done)
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            cols = order[start:start + batch_size]
            Xb = X[:, cols]
            frac = cols.size / n
            R = (W2 @ W1 @ Xb - Xb) @ Xb.T
            g1 = 2.0 * W2.T @ R
            g2 = 2.0 * R @ W1.T
            if spec.kind == "sum":
                g1 += 2.0 * spec.lam * frac * W1
                g2 += 2.0 * spec.lam * frac * W2
            elif spec.kind == "product":
                g1 += 2.0 * spec.lam * frac * W2.T @ W2 @ W1
                g2 += 2.0 * spec.lam * frac * W2 @ W1 @ W1.T
            t += 1
            for i, gi in enumerate((g1, g2)):
                mom[i] = ADAM_BETA1 * mom[i] + (1 - ADAM_BETA1) * gi
                vel[i] = ADAM_BETA2 * vel[i] + (1 - ADAM_BETA2) * gi**2
                mhat = mom[i] / (1 - ADAM_BETA1**t)
                vhat = vel[i] / (1 - ADAM_BETA2**t)
                step = learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
                if i == 0:
                    W1 = W1 - step
                else:
                    W2 = W2 - step
        if not (np.all(np.isfinite(W1)) and np.all(np.isfinite(W2))):
            raise ValueError("minibatch_adam: parameters diverged")
    return LaeParams(W1, W2)
