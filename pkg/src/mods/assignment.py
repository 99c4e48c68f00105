"""Minimum-cost bipartite assignment via shortest augmenting paths.

The solver runs in O(n^3) using dual potentials (Jonker-Volgenant style
augmentation). Rectangular matrices are padded to square with a constant
larger than every entry; pairs landing in the padding are dropped, so the
result always contains exactly min(m, n) disjoint pairs.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantError


def _validate(cost: np.ndarray) -> np.ndarray:
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] < 1 or cost.shape[1] < 1:
        raise InvariantError("cost matrix must be 2-D with m, n >= 1")
    bad = ~np.isfinite(cost)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise InvariantError(f"non-finite cost at cell ({r}, {c})")
    neg = cost < 0
    if neg.any():
        r, c = np.argwhere(neg)[0]
        raise InvariantError(f"negative cost at cell ({r}, {c})")
    return cost


def _solve_square(a: np.ndarray) -> np.ndarray:
    """Return col->row matching for a square matrix (0-based, all assigned).

    Successive shortest augmenting paths with dual potentials; columns used
    on the current path are parked at +inf inside `minv` so each Dijkstra
    step is a handful of whole-row vector operations.
    """
    n = a.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n)
    match = np.zeros(n + 1, dtype=np.int64)  # match[j+1] = row at col j, 1-based
    way = np.zeros(n, dtype=np.int64)
    cur = np.empty(n)
    used_cols = np.empty(n + 1, dtype=np.int64)
    used_rows = np.empty(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0  # 1-based column on the path head; 0 = virtual start
        minv = np.full(n, np.inf)
        n_used = 0
        while True:
            i0 = match[j0]
            used_cols[n_used] = j0
            used_rows[n_used] = i0
            n_used += 1
            np.subtract(a[i0 - 1], v, out=cur)
            cur -= u[i0]
            cur[used_cols[1:n_used] - 1] = np.inf
            improved = cur < minv
            np.copyto(minv, cur, where=improved)
            way[improved] = j0
            j0 = int(np.argmin(minv)) + 1
            delta = minv[j0 - 1]
            u[used_rows[:n_used]] += delta
            v[used_cols[1:n_used] - 1] -= delta
            minv -= delta
            minv[j0 - 1] = np.inf
            if match[j0] == 0:
                break
        while j0:
            j1 = int(way[j0 - 1])
            match[j0] = match[j1]
            j0 = j1
    return match[1:] - 1


def solve(cost: np.ndarray) -> list[tuple[int, int]]:
    """Optimal disjoint (row, col) pairs, exactly min(m, n) of them, row-sorted."""
    cost = _validate(cost)
    m, n = cost.shape
    size = max(m, n)
    if size > m or size > n:
        pad_value = float(cost.max()) + 1.0
        padded = np.full((size, size), pad_value)
        padded[:m, :n] = cost
    else:
        padded = cost
    col_to_row = _solve_square(padded)
    pairs = [
        (int(row), int(col))
        for col, row in enumerate(col_to_row)
        if row < m and col < n
    ]
    pairs.sort()
    return pairs


def total_cost(cost: np.ndarray, pairs: list[tuple[int, int]]) -> float:
    cost = np.asarray(cost, dtype=np.float64)
    return float(sum(cost[r, c] for r, c in pairs))
