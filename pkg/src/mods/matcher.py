"""Document-pair similarity scores and corpus ranking.

Two scores per pair: a symmetric word-match distance (mean of best
cross-document word distances, lower = more similar) and the region-tiled
similarity in [0, 1] built from unique word assignments under a distance
threshold. Regions are windows of consecutive text lines, so content that
re-flows across line breaks stays co-resident in some window.
"""

from __future__ import annotations

import dataclasses
import multiprocessing
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import ann, assignment
from .descriptor import default_lexicon, is_stopword
from .docmodel import CorpusManifest, DocumentRecord, EmbeddingStore, WordBox
from .errors import InvariantError

MAX_DISTANCE = 2.0  # L2 distance between unit vectors never exceeds this


@dataclass(frozen=True)
class MatchConfig:
    gamma: float = 0.6             # cosine-distance cutoff for retained pairs
    region_lines: int = 3          # lines per region window
    region_stride: int = 1         # window advance in lines
    stopword_tau: float = 0.7
    ann_mode: str = "exact"
    ann_leaf_size: int = 16
    ann_max_visited_leaves: int = 64
    stopword_lexicon: frozenset[str] | None = None  # None = packaged default

    def __post_init__(self):
        if not 0.0 < self.gamma <= 2.0:
            raise InvariantError("gamma must lie in (0, 2]")
        if self.region_lines < 1:
            raise InvariantError("region_lines must be >= 1")
        if not 1 <= self.region_stride <= self.region_lines:
            raise InvariantError("region_stride must lie in [1, region_lines]")
        if not 0.0 <= self.stopword_tau <= 1.0:
            raise InvariantError("stopword_tau must lie in [0, 1]")
        if self.ann_mode not in ann.MODES:
            raise InvariantError(f"unknown ann mode {self.ann_mode!r}")

    def lexicon(self) -> frozenset[str]:
        return (
            self.stopword_lexicon
            if self.stopword_lexicon is not None
            else default_lexicon()
        )


@dataclass(frozen=True)
class Region:
    """A window of consecutive lines over one document."""

    region_id: str
    doc_id: str
    first_line: int
    last_line: int
    word_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.word_ids:
            raise InvariantError(f"region {self.region_id!r}: no member words")
        if self.last_line < self.first_line:
            raise InvariantError(f"region {self.region_id!r}: inverted line span")

    @property
    def size(self) -> int:
        return len(self.word_ids)


@dataclass(frozen=True)
class RegionMatch:
    region: Region
    target: Region | None
    pairs: tuple[tuple[str, str, float], ...]  # (source word, target word, distance)
    score: float


@dataclass(frozen=True)
class PairScore:
    query_doc: str
    target_doc: str
    swm: float        # distance, symmetric, lower = more similar
    mods_raw: float   # region score sum over max word count
    mods_norm: float  # size-weighted variant, always in [0, 1]
    region_matches: tuple[RegionMatch, ...] = ()


def content_words(
    doc: DocumentRecord,
    store: EmbeddingStore | None = None,
    cfg: MatchConfig | None = None,
) -> list[WordBox]:
    """Words surviving stopword removal.

    Probabilities from the embedding store fill in for boxes that carry
    none of their own; probability evidence then takes precedence over the
    label lexicon.
    """
    cfg = cfg or MatchConfig()
    lexicon = cfg.lexicon()
    kept = []
    for box in doc.words:
        effective = box
        if box.stopword_prob is None and store is not None and box.word_id in store:
            prob = store.stopword_prob(box.word_id)
            if prob is not None:
                effective = dataclasses.replace(box, stopword_prob=prob)
        if not is_stopword(effective, cfg.stopword_tau, lexicon):
            kept.append(box)
    return kept


def _unit_rows(words: Sequence[WordBox], store: EmbeddingStore) -> np.ndarray:
    rows = []
    for box in words:
        if box.word_id not in store:
            raise InvariantError(f"word {box.word_id!r} has no embedding")
        vec = store.vector(box.word_id).astype(np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise InvariantError(f"word {box.word_id!r}: zero-norm embedding")
        rows.append(vec / norm)
    if not rows:
        return np.empty((0, store.dim), dtype=np.float64)
    return np.stack(rows)


def _tile(doc_id: str, words: Sequence[WordBox], cfg: MatchConfig) -> list[Region]:
    if not words:
        return []
    lo = min(w.line_index for w in words)
    hi = max(w.line_index for w in words)
    spans = []
    start = lo
    while True:
        end = start + cfg.region_lines - 1
        if end >= hi:
            spans.append((start, hi))
            break
        spans.append((start, end))
        start += cfg.region_stride
    regions = []
    for start, end in spans:
        member_ids = tuple(
            w.word_id for w in words if start <= w.line_index <= end
        )
        if not member_ids:
            continue
        regions.append(
            Region(
                region_id=f"{doc_id}:r{start}-{end}",
                doc_id=doc_id,
                first_line=start,
                last_line=end,
                word_ids=member_ids,
            )
        )
    return regions


def tile_regions(
    doc: DocumentRecord,
    cfg: MatchConfig | None = None,
    store: EmbeddingStore | None = None,
) -> list[Region]:
    """Overlapping line windows over the document's content words."""
    cfg = cfg or MatchConfig()
    return _tile(doc.doc_id, content_words(doc, store, cfg), cfg)


@dataclass(frozen=True)
class _DocView:
    """Per-document scoring state shared across pair computations."""

    doc_id: str
    word_ids: tuple[str, ...]
    vectors: np.ndarray  # (n, d) float64 unit rows
    regions: tuple[Region, ...]
    region_rows: tuple[np.ndarray, ...]

    @property
    def size(self) -> int:
        return len(self.word_ids)


def _build_view(
    doc: DocumentRecord, store: EmbeddingStore, cfg: MatchConfig
) -> _DocView:
    words = content_words(doc, store, cfg)
    vectors = _unit_rows(words, store)
    regions = tuple(_tile(doc.doc_id, words, cfg))
    row_of = {w.word_id: k for k, w in enumerate(words)}
    region_rows = tuple(
        np.array([row_of[w] for w in r.word_ids], dtype=np.intp) for r in regions
    )
    return _DocView(
        doc_id=doc.doc_id,
        word_ids=tuple(w.word_id for w in words),
        vectors=vectors,
        regions=regions,
        region_rows=region_rows,
    )


def swm_score(
    di: DocumentRecord,
    dj: DocumentRecord,
    store: EmbeddingStore,
    cfg: MatchConfig | None = None,
) -> float:
    """Symmetric mean of best cross-document word distances after filtering."""
    cfg = cfg or MatchConfig()
    vi = _build_view(di, store, cfg)
    vj = _build_view(dj, store, cfg)
    return _swm_from_views(vi, vj, cfg)


def _swm_from_views(vi: _DocView, vj: _DocView, cfg: MatchConfig) -> float:
    if vi.size == 0 or vj.size == 0:
        return MAX_DISTANCE
    if cfg.ann_mode == "exact":
        # one matrix pass; matches per-query exact search up to float rounding
        d2 = (
            (vi.vectors**2).sum(axis=1)[:, None]
            + (vj.vectors**2).sum(axis=1)[None, :]
            - 2.0 * (vi.vectors @ vj.vectors.T)
        )
        np.clip(d2, 0.0, None, out=d2)
        dist = np.sqrt(d2)
        sum_i = float(dist.min(axis=1).sum())
        sum_j = float(dist.min(axis=0).sum())
        return (sum_i + sum_j) / (vi.size + vj.size)
    index_j = ann.build(
        zip(vj.word_ids, vj.vectors),
        mode=cfg.ann_mode,
        leaf_size=cfg.ann_leaf_size,
        max_visited_leaves=cfg.ann_max_visited_leaves,
    )
    index_i = ann.build(
        zip(vi.word_ids, vi.vectors),
        mode=cfg.ann_mode,
        leaf_size=cfg.ann_leaf_size,
        max_visited_leaves=cfg.ann_max_visited_leaves,
    )
    sum_i = sum(ann.query_knn(index_j, row, 1)[0][1] for row in vi.vectors)
    sum_j = sum(ann.query_knn(index_i, row, 1)[0][1] for row in vj.vectors)
    return (sum_i + sum_j) / (vi.size + vj.size)


def _best_region_match(
    p: Region,
    candidates: list[tuple[Region, np.ndarray]],
    cfg: MatchConfig,
) -> RegionMatch:
    """Pick the target region maximizing the assignment score for p.

    Candidates are pruned with an upper bound (best unconstrained gain per
    source word); exact score ties go to the target with the smallest line
    span start, then region id.
    """
    if not candidates:
        raise InvariantError(f"region {p.region_id!r}: no candidate targets")
    scored = []
    for q, sub in candidates:
        gain = np.clip(1.0 - sub.min(axis=1), 0.0, None).sum()
        ub = gain / max(p.size, q.size)
        scored.append((ub, q, sub))
    scored.sort(key=lambda item: (-item[0], item[1].first_line, item[1].region_id))

    best_score = -1.0
    best_q: Region | None = None
    best_pairs: tuple = ()
    for ub, q, sub in scored:
        if ub < best_score:
            break
        if ub == 0.0 and cfg.gamma <= 1.0:
            score, pairs = 0.0, ()
        else:
            idx_pairs = assignment.solve(sub)
            retained = [(r, c) for r, c in idx_pairs if sub[r, c] <= cfg.gamma]
            contributions = np.sort(
                np.clip(1.0 - np.array([sub[r, c] for r, c in retained]), 0.0, None)
            )
            score = float(contributions.sum()) / max(p.size, q.size)
            pairs = tuple(
                (p.word_ids[r], q.word_ids[c], float(sub[r, c])) for r, c in retained
            )
        better = score > best_score or (
            score == best_score
            and best_q is not None
            and (q.first_line, q.region_id)
            < (best_q.first_line, best_q.region_id)
        )
        if better:
            best_score, best_q, best_pairs = score, q, pairs
    return RegionMatch(region=p, target=best_q, pairs=best_pairs, score=best_score)


def region_score(
    p: Region,
    targets: Sequence[Region],
    store: EmbeddingStore,
    cfg: MatchConfig | None = None,
) -> RegionMatch:
    """Score one region against candidate target regions."""
    cfg = cfg or MatchConfig()
    if not targets:
        raise InvariantError("region_score requires at least one target region")
    vp = _unit_rows_by_id(p.word_ids, store)
    candidates = []
    for q in targets:
        vq = _unit_rows_by_id(q.word_ids, store)
        sub = np.clip(1.0 - vp @ vq.T, 0.0, 2.0)
        candidates.append((q, sub))
    return _best_region_match(p, candidates, cfg)


def _unit_rows_by_id(word_ids: Sequence[str], store: EmbeddingStore) -> np.ndarray:
    rows = []
    for word_id in word_ids:
        vec = store.vector(word_id).astype(np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise InvariantError(f"word {word_id!r}: zero-norm embedding")
        rows.append(vec / norm)
    return np.stack(rows)


def mods_score(
    di: DocumentRecord,
    dj: DocumentRecord,
    store: EmbeddingStore,
    cfg: MatchConfig | None = None,
) -> PairScore:
    """Full pair score: region-tiled similarity plus the symmetric distance."""
    cfg = cfg or MatchConfig()
    return _pair_from_views(
        _build_view(di, store, cfg), _build_view(dj, store, cfg), cfg
    )


def _pair_from_views(vi: _DocView, vj: _DocView, cfg: MatchConfig) -> PairScore:
    if vi.size == 0 or vj.size == 0:
        return PairScore(vi.doc_id, vj.doc_id, MAX_DISTANCE, 0.0, 0.0, ())
    swm = _swm_from_views(vi, vj, cfg)
    distances = np.clip(1.0 - vi.vectors @ vj.vectors.T, 0.0, 2.0)
    matches = []
    for p, prows in zip(vi.regions, vi.region_rows):
        candidates = [
            (q, distances[np.ix_(prows, qrows)])
            for q, qrows in zip(vj.regions, vj.region_rows)
        ]
        matches.append(_best_region_match(p, candidates, cfg))
    total = sum(m.score for m in matches)
    weighted = sum(m.region.size * m.score for m in matches)
    weight = sum(m.region.size for m in matches)
    mods_raw = total / max(vi.size, vj.size)
    mods_norm = weighted / weight if weight else 0.0
    return PairScore(vi.doc_id, vj.doc_id, swm, mods_raw, mods_norm, tuple(matches))


# ---------------------------------------------------------------------------
# Corpus ranking
# ---------------------------------------------------------------------------

_worker_ctx: dict = {}


def _init_worker(query, store, cfg):
    _worker_ctx["view"] = _build_view(query, store, cfg)
    _worker_ctx["store"] = store
    _worker_ctx["cfg"] = cfg


def _score_one(target: DocumentRecord) -> PairScore:
    cfg = _worker_ctx["cfg"]
    return _pair_from_views(
        _worker_ctx["view"], _build_view(target, _worker_ctx["store"], cfg), cfg
    )


def score_corpus(
    query: DocumentRecord,
    corpus: CorpusManifest,
    store: EmbeddingStore,
    cfg: MatchConfig | None = None,
    metric: str = "mods",
    jobs: int = 1,
) -> list[PairScore]:
    """Pair scores of the query against every other corpus document, ranked.

    Ordering: descending region similarity for ``mods``, ascending distance
    for ``swm``; equal scores break by target doc_id. Worker count never
    changes the result.
    """
    cfg = cfg or MatchConfig()
    if metric not in ("mods", "swm"):
        raise InvariantError(f"unknown ranking metric {metric!r}")
    targets = [d for d in corpus.documents if d.doc_id != query.doc_id]
    if jobs > 1 and len(targets) > 1:
        context = multiprocessing.get_context("fork")
        with context.Pool(
            processes=jobs, initializer=_init_worker, initargs=(query, store, cfg)
        ) as pool:
            scores = pool.map(_score_one, targets)
    else:
        view = _build_view(query, store, cfg)
        scores = [
            _pair_from_views(view, _build_view(t, store, cfg), cfg) for t in targets
        ]
    if metric == "mods":
        scores.sort(key=lambda s: (-s.mods_norm, s.target_doc))
    else:
        scores.sort(key=lambda s: (s.swm, s.target_doc))
    return scores


def rank_corpus(
    query: DocumentRecord,
    corpus: CorpusManifest,
    store: EmbeddingStore,
    cfg: MatchConfig | None = None,
    metric: str = "mods",
    jobs: int = 1,
) -> list[tuple[str, float]]:
    """Ranked (doc_id, score) list; the query itself is excluded."""
    scores = score_corpus(query, corpus, store, cfg, metric, jobs)
    if metric == "mods":
        return [(s.target_doc, s.mods_norm) for s in scores]
    return [(s.target_doc, s.swm) for s in scores]
