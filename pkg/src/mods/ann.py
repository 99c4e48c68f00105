"""Nearest-neighbor search over unit vectors.

Two modes share one interface: ``exact`` scans every vector (the oracle),
``kdtree`` runs a best-bin-first descent that stops after visiting a bounded
number of leaves. All vectors are L2-normalized at build time; queries are
normalized too, so reported distances are between unit vectors.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import InvariantError

MODES = ("exact", "kdtree")


@dataclass(frozen=True)
class _Leaf:
    indices: np.ndarray


@dataclass(frozen=True)
class _Split:
    dim: int
    threshold: float
    left: Union["_Split", _Leaf]
    right: Union["_Split", _Leaf]


def _build_node(vectors: np.ndarray, indices: np.ndarray, leaf_size: int):
    if indices.shape[0] <= leaf_size:
        return _Leaf(indices)
    sub = vectors[indices]
    dim = int(np.argmax(sub.var(axis=0)))
    values = sub[:, dim]
    order = np.argsort(values, kind="stable")
    half = indices.shape[0] // 2
    lo = values[order[half - 1]]
    hi = values[order[half]]
    threshold = 0.5 * (lo + hi)
    return _Split(
        dim=dim,
        threshold=threshold,
        left=_build_node(vectors, indices[order[:half]], leaf_size),
        right=_build_node(vectors, indices[order[half:]], leaf_size),
    )


class VectorIndex:
    """Immutable similarity index; concurrent queries need no locking."""

    def __init__(
        self,
        ids: tuple[str, ...],
        vectors: np.ndarray,
        mode: str,
        leaf_size: int,
        max_visited_leaves: int,
    ):
        self.ids = ids
        self.vectors = vectors
        self.mode = mode
        self.leaf_size = leaf_size
        self.max_visited_leaves = max_visited_leaves
        # lexicographic id rank used for deterministic tie-breaking
        order = sorted(range(len(ids)), key=ids.__getitem__)
        rank = np.empty(len(ids), dtype=np.int64)
        for r, i in enumerate(order):
            rank[i] = r
        self._rank = rank
        self._root = (
            _build_node(vectors, np.arange(len(ids)), leaf_size)
            if mode == "kdtree" and len(ids)
            else None
        )

    @property
    def dim(self) -> int:
        return self.vectors.shape[1] if self.vectors.size else 0

    def __len__(self) -> int:
        return len(self.ids)


def _normalize(vec: np.ndarray, what: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise InvariantError(f"{what}: zero-norm vector cannot be normalized")
    return vec / norm


def build(
    items: Iterable[tuple[str, np.ndarray]],
    mode: str = "exact",
    leaf_size: int = 16,
    max_visited_leaves: int = 64,
) -> VectorIndex:
    """Build an index; vectors are re-normalized, ids must be unique."""
    if mode not in MODES:
        raise InvariantError(f"unknown index mode {mode!r}")
    if leaf_size < 1 or max_visited_leaves < 1:
        raise InvariantError("leaf_size and max_visited_leaves must be >= 1")
    ids: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dim: int | None = None
    for item_id, vec in items:
        if item_id in seen:
            raise InvariantError(f"duplicate index id {item_id!r}")
        seen.add(item_id)
        row = _normalize(vec, f"index item {item_id!r}")
        if dim is None:
            dim = row.shape[0]
        elif row.shape[0] != dim:
            raise InvariantError(
                f"index item {item_id!r}: dimension {row.shape[0]} != {dim}"
            )
        ids.append(item_id)
        rows.append(row)
    vectors = (
        np.stack(rows) if rows else np.empty((0, dim or 0), dtype=np.float64)
    )
    return VectorIndex(tuple(ids), vectors, mode, leaf_size, max_visited_leaves)


def _take_best(d2: np.ndarray, rank: np.ndarray, k: int):
    order = np.lexsort((rank, d2))[:k]
    return order


def query_knn(index: VectorIndex, q: np.ndarray, k: int) -> list[tuple[str, float]]:
    """k nearest stored ids by L2 distance, ascending, ties broken by id."""
    if k < 1:
        raise InvariantError("k must be >= 1")
    if len(index) == 0:
        return []
    q = _normalize(q, "query")
    if q.shape[0] != index.dim:
        raise InvariantError(f"query dimension {q.shape[0]} != index dimension {index.dim}")
    if index.mode == "exact" or index._root is None:
        d2 = ((index.vectors - q) ** 2).sum(axis=1)
        picked = _take_best(d2, index._rank, k)
        return [(index.ids[i], float(np.sqrt(d2[i]))) for i in picked]
    return _query_kdtree(index, q, k)


def _query_kdtree(index: VectorIndex, q: np.ndarray, k: int) -> list[tuple[str, float]]:
    # best: max-heap over (-d2, -rank) so the worst kept candidate sits on top
    best: list[tuple[float, int, int]] = []
    counter = itertools.count()
    node_heap: list = [(0.0, next(counter), index._root, ())]
    visited = 0
    while node_heap and visited < index.max_visited_leaves:
        bound, _, node, offsets = heapq.heappop(node_heap)
        if len(best) == k and bound > -best[0][0]:
            continue
        while isinstance(node, _Split):
            off = q[node.dim] - node.threshold
            old = 0.0
            for d, o in offsets:
                if d == node.dim:
                    old = o
                    break
            far_bound = bound - old + off * off
            far_offsets = tuple(
                (d, o) for d, o in offsets if d != node.dim
            ) + ((node.dim, off * off),)
            if off <= 0:
                near, far = node.left, node.right
            else:
                near, far = node.right, node.left
            heapq.heappush(node_heap, (far_bound, next(counter), far, far_offsets))
            node = near
        visited += 1
        idx = node.indices
        d2 = ((index.vectors[idx] - q) ** 2).sum(axis=1)
        for j in range(idx.shape[0]):
            cand = (-float(d2[j]), -int(index._rank[idx[j]]), int(idx[j]))
            if len(best) < k:
                heapq.heappush(best, cand)
            elif cand > best[0]:
                heapq.heapreplace(best, cand)
    result = sorted(((-negd2, -negrank, i) for negd2, negrank, i in best))
    return [(index.ids[i], float(np.sqrt(d2v))) for d2v, _, i in result]
