"""Retrieval and similarity metrics: AP/mAP, nDCG@p, ROC-AUC, stem matching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvariantError
from .stemmer import porter_stem


@dataclass(frozen=True)
class RankedList:
    """Items in ranked order with scores (non-increasing) and integer grades."""

    items: tuple[str, ...]
    scores: tuple[float, ...]
    grades: tuple[int, ...]

    def __post_init__(self):
        if not len(self.items) == len(self.scores) == len(self.grades):
            raise InvariantError("ranked list fields must have equal length")
        if any(a < b for a, b in zip(self.scores, self.scores[1:])):
            raise InvariantError("ranked list scores must be non-increasing")
        if any(g < 0 for g in self.grades):
            raise InvariantError("relevance grades must be >= 0")

    @classmethod
    def from_scored(
        cls, scored: Iterable[tuple[str, float]], grades: Mapping[str, int]
    ) -> "RankedList":
        """Sort (item, score) pairs by descending score (ties by item id)."""
        ordered = sorted(scored, key=lambda kv: (-kv[1], kv[0]))
        return cls(
            items=tuple(item for item, _ in ordered),
            scores=tuple(score for _, score in ordered),
            grades=tuple(int(grades[item]) for item, _ in ordered),
        )

    def __len__(self) -> int:
        return len(self.items)


def average_precision(
    ranked: RankedList, relevant: Sequence[bool] | None = None
) -> float:
    """AP: mean over relevant ranks r of (relevant in top r) / r.

    `relevant` defaults to grade > 0. At least one item must be relevant.
    """
    flags = [g > 0 for g in ranked.grades] if relevant is None else list(relevant)
    if len(flags) != len(ranked):
        raise InvariantError("relevance flags must match the ranking length")
    hits = 0
    precisions = []
    for rank, flag in enumerate(flags, start=1):
        if flag:
            hits += 1
            precisions.append(hits / rank)
    if not precisions:
        raise InvariantError("average_precision needs at least one relevant item")
    return sum(precisions) / len(precisions)


@dataclass(frozen=True)
class MeanAPResult:
    value: float
    evaluated: int
    skipped: int  # queries with zero relevant items


def mean_ap(queries: Iterable[RankedList]) -> MeanAPResult:
    """Unweighted mean AP; zero-relevant queries are skipped and counted."""
    values = []
    skipped = 0
    for ranked in queries:
        if not any(g > 0 for g in ranked.grades):
            skipped += 1
            continue
        values.append(average_precision(ranked))
    value = sum(values) / len(values) if values else 0.0
    return MeanAPResult(value=value, evaluated=len(values), skipped=skipped)


def _dcg(grades: Sequence[int], p: int) -> float:
    return sum(
        (2.0**g - 1.0) / np.log2(i + 1) for i, g in enumerate(grades[:p], start=1)
    )


def ndcg_at(ranked: RankedList, p: int) -> float:
    """Graded ranking quality at cutoff p; 0.0 when the ideal DCG is 0."""
    if p < 1:
        raise InvariantError("ndcg cutoff p must be >= 1")
    ideal = sorted(ranked.grades, reverse=True)
    idcg = _dcg(ideal, p)
    if idcg == 0.0:
        return 0.0
    return _dcg(ranked.grades, p) / idcg


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability a random positive outscores a random negative (ties 0.5)."""
    if len(scores) != len(labels):
        raise InvariantError("scores and labels must have equal length")
    pos = np.asarray([s for s, l in zip(scores, labels) if l], dtype=np.float64)
    neg = np.asarray([s for s, l in zip(scores, labels) if not l], dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise InvariantError("roc_auc needs at least one positive and one negative")
    neg_sorted = np.sort(neg)
    wins = np.searchsorted(neg_sorted, pos, side="left").sum()
    ties = (
        np.searchsorted(neg_sorted, pos, side="right").sum()
        - np.searchsorted(neg_sorted, pos, side="left").sum()
    )
    return float((wins + 0.5 * ties) / (pos.size * neg.size))


def inexact_match(query_label: str, target_label: str) -> bool:
    """True when both labels share a Porter stem (case-insensitive)."""
    return porter_stem(query_label.lower()) == porter_stem(target_label.lower())
