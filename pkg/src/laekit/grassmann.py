"""Morse data of the subspace-reconstruction loss on the Grassmannian.

The squared distance from a point cloud to a k-plane, viewed as a function
on the manifold of k-planes in R^m, has exactly C(m, k) critical points
when the data's singular values are distinct: the coordinate subspaces
spanned by size-k subsets of principal directions. This module enumerates
those critical points, their Morse indices and values, and the parity of
the gradient-trajectory counts between them.
"""

from dataclasses import dataclass
from functools import cache
from itertools import combinations
from math import comb

import numpy as np

from .data import DataMatrix

# Dense enumeration over C(m, k) index sets; keep it desk-scale.
MAX_AMBIENT_DIM = 20


@dataclass(frozen=True)
class MorseCell:
    """One critical subspace: retained indices, Morse index, loss value."""

    index_set: tuple[int, ...]
    morse_index: int
    critical_value: float


def _check_index_set(index_set, size: int | None = None) -> tuple[int, ...]:
    idx = tuple(int(i) for i in index_set)
    if any(i < 1 for i in idx):
        raise ValueError(f"index set must be 1-based positive, got {idx}")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"index set must be strictly increasing, got {idx}")
    if size is not None and len(idx) != size:
        raise ValueError(f"index set must have size {size}, got {idx}")
    return idx


def morse_index(index_set, k: int) -> int:
    """Morse index of the critical subspace with retained indices ``index_set``.

    Equals sum_j (i_j - j), the number of pairs (a, b) with a retained,
    b dropped, and b < a: each such pair is one independent direction in
    which rotating u_a toward the higher-variance u_b lowers the loss.
    """
    idx = _check_index_set(index_set, size=k)
    return sum(i - j for j, i in enumerate(idx, start=1))


def enumerate_cells(data: DataMatrix, k: int) -> list[MorseCell]:
    """All C(m, k) critical subspaces with Morse index and critical value.

    Requires a simple spectrum (distinct singular values); the critical
    value of an index set is the sum of excluded squared singular values.
    """
    m = data.m
    if not 0 < k <= m:
        raise ValueError(f"enumerate_cells: need 1 <= k <= m, got k={k}, m={m}")
    if m > MAX_AMBIENT_DIM:
        raise ValueError(f"enumerate_cells: m={m} exceeds the guard rail {MAX_AMBIENT_DIM}")
    s = data.svd.s
    if len(s) < m:
        raise ValueError("enumerate_cells: data has fewer singular values than rows")
    gaps = np.abs(np.diff(s))
    if np.any(gaps <= 1e-9 * s[:-1]):
        raise ValueError("enumerate_cells: repeated singular values; critical points degenerate")
    s2 = s**2
    total = float(s2.sum())
    cells = []
    for idx in combinations(range(1, m + 1), k):
        kept = float(sum(s2[i - 1] for i in idx))
        cells.append(MorseCell(idx, morse_index(idx, k), total - kept))
    return cells


def loss_on_plane(data: DataMatrix, basis) -> float:
    """Sum of squared distances from the data columns to span(basis).

    ``basis`` must have orthonormal columns (checked to 1e-8). Invariant
    under basis rotations, so this is a function of the subspace alone.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim != 2 or B.shape[0] != data.m:
        raise ValueError(f"loss_on_plane: basis shape {B.shape} incompatible with m={data.m}")
    k = B.shape[1]
    if np.abs(B.T @ B - np.eye(k)).max() > 1e-8:
        raise ValueError("loss_on_plane: basis columns are not orthonormal")
    R = data.X - B @ (B.T @ data.X)
    return float(np.sum(R * R))


@dataclass(frozen=True)
class BoundaryParityReport:
    """Gradient-trajectory counts between critical subspaces of adjacent index.

    ``pairs`` lists (upper index set, lower index set, trajectory count) for
    every pair with Morse indices (d, d-1). Counts are combinatorial: a pair
    is connected by exactly two trajectories (the two senses of rotating one
    retained direction toward one dropped direction in the plane they span)
    when the sets differ by one such swap, else zero. ``index_counts`` maps
    each Morse index to its number of cells; ``box_partition_counts`` is the
    independent count of partitions fitting in a k x (m-k) box.
    """

    m: int
    k: int
    pairs: tuple[tuple[tuple[int, ...], tuple[int, ...], int], ...]
    all_even: bool
    index_counts: dict[int, int]
    box_partition_counts: dict[int, int]
    counts_match: bool


@cache
def _gaussian_binomial(n: int, k: int) -> list[int]:
    # Coefficient list of the q-binomial [n, k]_q via the Pascal-type
    # recurrence [n, k] = [n-1, k-1] + q^k [n-1, k]; coefficient d counts
    # the partitions of d fitting in a k x (n-k) box.
    if k < 0 or k > n:
        return [0]
    if k == 0 or k == n:
        return [1]
    left = _gaussian_binomial(n - 1, k - 1)
    right = _gaussian_binomial(n - 1, k)
    out = [0] * (k * (n - k) + 1)
    for d, c in enumerate(left):
        out[d] += c
    for d, c in enumerate(right):
        out[d + k] += c
    return out


def _partitions_in_box(rows: int, cols: int) -> dict[int, int]:
    coeffs = _gaussian_binomial(rows + cols, rows)
    return {d: c for d, c in enumerate(coeffs) if c}


def boundary_parity(m: int, k: int) -> BoundaryParityReport:
    """Check that all adjacent-index trajectory counts are even.

    Also verifies that the number of cells at each Morse index matches the
    partitions-in-a-box count (the Gaussian-binomial coefficients), an
    independent combinatorial oracle.
    """
    if not 0 < k <= m:
        raise ValueError(f"boundary_parity: need 1 <= k <= m, got k={k}, m={m}")
    if m > MAX_AMBIENT_DIM:
        raise ValueError(f"boundary_parity: m={m} exceeds the guard rail {MAX_AMBIENT_DIM}")
    cells = [(idx, morse_index(idx, k)) for idx in combinations(range(1, m + 1), k)]
    assert len(cells) == comb(m, k)
    pairs = []
    for upper, d_up in cells:
        upper_set = set(upper)
        for lower, d_lo in cells:
            if d_lo != d_up - 1:
                continue
            diff_out = upper_set - set(lower)
            diff_in = set(lower) - upper_set
            swap = len(diff_out) == 1 and len(diff_in) == 1
            count = 2 if swap else 0
            pairs.append((upper, lower, count))
    index_counts: dict[int, int] = {}
    for _, d in cells:
        index_counts[d] = index_counts.get(d, 0) + 1
    box_counts = _partitions_in_box(k, m - k)
    return BoundaryParityReport(
        m=m,
        k=k,
        pairs=tuple(pairs),
        all_even=all(c % 2 == 0 for _, _, c in pairs),
        index_counts=index_counts,
        box_partition_counts=box_counts,
        counts_match=index_counts == box_counts,
    )
