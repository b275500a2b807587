"""Render report tables as figures next to their CSVs.

All functions write a PNG to the given path and return the path. Rendering
is headless (Agg); nothing is ever shown interactively.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grassmann import MorseCell
from .training import TrainTrace
from .verify import ShrinkageReport

KIND_COLORS = {"unregularized": "tab:blue", "product": "tab:orange", "sum": "tab:green"}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_trace(trace: TrainTrace, path, title: str = "") -> Path:
    """Loss, transpose gap, and gradient norm against epoch (log scale)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(trace.epochs, trace.loss, label="loss")
    gap = np.maximum(trace.transpose_gap, 1e-300)
    ax.plot(trace.epochs, gap, label=r"$\|W_1 - W_2^T\|_F^2$")
    ax.plot(trace.epochs, np.maximum(trace.grad_norm, 1e-300), label="gradient norm")
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_alignment(block: np.ndarray, m: int, path, title: str = "") -> Path:
    """Heat map of the [U V*]^T [U U*] block matrix, black=-1 white=+1."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.imshow(block, cmap="gray", vmin=-1.0, vmax=1.0, interpolation="nearest")
    ax.axhline(m - 0.5, color="tab:red", lw=0.8)
    ax.axvline(m - 0.5, color="tab:red", lw=0.8)
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_shrinkage(reports: dict[float, ShrinkageReport], kind: str, path) -> Path:
    """Empirical (sigma^2, tau^2) points with the theory curve per lambda."""
    from .verify import shrinkage_theory

    fig, ax = plt.subplots(figsize=(6, 4))
    cmap = plt.get_cmap("viridis")
    lams = sorted(reports)
    for pos, lam in enumerate(lams):
        color = cmap(pos / max(1, len(lams) - 1))
        pts = np.asarray(reports[lam].points)
        ax.scatter(pts[:, 0], pts[:, 1], s=18, color=color, label=f"lam={lam:g}")
        s_hi = max(p[0] for p in reports[lam].points) or 1.0
        grid = np.linspace(1e-6, s_hi * 1.05, 400)
        ax.plot(grid, [shrinkage_theory(kind, s, lam) for s in grid], color=color, lw=1)
    ax.set_xlabel(r"$\sigma^2$")
    ax.set_ylabel(r"$\tau^2$")
    ax.set_title(f"{kind} loss")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_cells(cells: list[MorseCell], path) -> Path:
    """Critical value against Morse index, one dot per index set."""
    fig, ax = plt.subplots(figsize=(6, 4))
    d = [c.morse_index for c in cells]
    v = [c.critical_value for c in cells]
    ax.scatter(d, v, s=24)
    for c in cells:
        ax.annotate(
            "{" + ",".join(map(str, c.index_set)) + "}",
            (c.morse_index, c.critical_value),
            textcoords="offset points",
            xytext=(4, 2),
            fontsize=7,
        )
    ax.set_xlabel("Morse index")
    ax.set_ylabel("critical value")
    return _save(fig, path)


def plot_components(directions: np.ndarray, path, reference: np.ndarray | None = None) -> Path:
    """Principal-direction gallery.

    Square row counts render as image grids (one image per column, with the
    reference directions below when given); other shapes fall back to line
    plots.
    """
    m, k = directions.shape
    side = int(round(np.sqrt(m)))
    as_images = side * side == m and m >= 16
    nrows = 2 if reference is not None else 1
    if as_images:
        fig, axes = plt.subplots(nrows, k, figsize=(1.2 * k, 1.3 * nrows), squeeze=False)
        for row, mat in enumerate([directions] + ([reference] if reference is not None else [])):
            for j in range(k):
                ax = axes[row][j]
                ax.imshow(mat[:, j].reshape(side, side), cmap="gray")
                ax.set_xticks([])
                ax.set_yticks([])
    else:
        fig, axes = plt.subplots(nrows, 1, figsize=(6, 3 * nrows), squeeze=False)
        axes[0][0].plot(directions)
        axes[0][0].set_title("recovered directions")
        if reference is not None:
            axes[1][0].plot(reference)
            axes[1][0].set_title("reference directions")
    return _save(fig, path)


def plot_eigenvalue_match(recovered: np.ndarray, reference: np.ndarray, path) -> Path:
    """Recovered against reference eigenvalues, with the identity line."""
    fig, ax = plt.subplots(figsize=(5, 4))
    finite = np.isfinite(recovered)
    ax.scatter(reference[finite], recovered[finite], s=24)
    lo = 0.0
    hi = max(float(reference.max()), float(recovered[finite].max() if finite.any() else 1.0))
    ax.plot([lo, hi], [lo, hi], color="k", lw=0.8, ls="--")
    ax.set_xlabel("reference eigenvalue")
    ax.set_ylabel("recovered eigenvalue")
    return _save(fig, path)


def plot_unit_circles(circles: dict[str, np.ndarray], path, title: str = "") -> Path:
    """Images of the unit circle under the latent maps A, B, and AB."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    styles = {"circle": ("0.6", "unit circle"), "A": ("tab:blue", "A"),
              "B": ("tab:orange", "B"), "AB": ("tab:green", "AB")}
    for key, pts in circles.items():
        color, label = styles.get(key, ("k", key))
        closed = np.hstack([pts, pts[:, :1]])
        ax.plot(closed[0], closed[1], color=color, label=label, lw=1.2)
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_criticals(rows: list[dict], path) -> Path:
    """Loss value by index-set size for an enumerated critical landscape."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ells = [r["ell"] for r in rows]
    vals = [r["loss"] for r in rows]
    desc = [r["descending"] for r in rows]
    sc = ax.scatter(ells, vals, c=desc, cmap="plasma", s=26)
    fig.colorbar(sc, ax=ax, label="descending directions")
    ax.set_xlabel("retained directions")
    ax.set_ylabel("loss value")
    return _save(fig, path)
