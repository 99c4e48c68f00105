"""Bottom-up page segmentation into line and word-box hypotheses.

The page is binarized (Otsu by default), 8-connected components are split
into small / medium / large size classes, medium components are chained
into lines by an adjacency cost, large components are sliced across the
lines they straddle, small ones attach to the nearest line, and finally
several gap thresholds produce alternative word groupings per line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .docmodel import Box, DocumentRecord, WordBox
from .errors import InvariantError


@dataclass(frozen=True)
class SegmenterConfig:
    small_factor: float = 0.4      # h < small_factor * median height -> s1
    large_factor: float = 2.0      # h > large_factor * median height -> s3
    cost_threshold: float = 1.5    # adjacency cost above this joins a line
    gap_factors: tuple[float, ...] = (1.0, 1.5, 2.0)
    page_scale_factor: float = 3.0  # page_scale = factor * median s2 height
    binarize_threshold: int | None = None  # fixed override; None = Otsu

    def __post_init__(self):
        if self.small_factor <= 0 or self.large_factor <= self.small_factor:
            raise InvariantError("size-class factors must satisfy 0 < small < large")
        if not self.gap_factors:
            raise InvariantError("at least one gap factor is required")
        if any(f <= 0 for f in self.gap_factors):
            raise InvariantError("gap factors must be positive")
        if self.binarize_threshold is not None and not 0 <= self.binarize_threshold <= 255:
            raise InvariantError("binarize_threshold must lie in [0, 255]")


@dataclass(frozen=True)
class ConnectedComponent:
    bbox: Box
    pixel_count: int
    centroid: tuple[float, float]  # (cx, cy) in pixel coordinates

    def __post_init__(self):
        if self.pixel_count < 1 or self.pixel_count > self.bbox.area:
            raise InvariantError(
                f"component pixel_count {self.pixel_count} outside (0, area] for {self.bbox}"
            )
        cx, cy = self.centroid
        if not (self.bbox.x - 0.5 <= cx <= self.bbox.x2 - 0.5) or not (
            self.bbox.y - 0.5 <= cy <= self.bbox.y2 - 0.5
        ):
            raise InvariantError(f"component centroid {self.centroid} outside {self.bbox}")


@dataclass(frozen=True)
class SizeClasses:
    s1: tuple[ConnectedComponent, ...]
    s2: tuple[ConnectedComponent, ...]
    s3: tuple[ConnectedComponent, ...]


@dataclass(frozen=True)
class LineHypothesis:
    line_index: int
    members: tuple[ConnectedComponent, ...]  # ordered by centroid x
    bbox: Box

    def __post_init__(self):
        if not self.members:
            raise InvariantError(f"line {self.line_index}: no members")
        xs = [m.centroid[0] for m in self.members]
        if xs != sorted(xs):
            raise InvariantError(f"line {self.line_index}: members not ordered by cx")


@dataclass(frozen=True)
class WordHypothesisSet:
    threshold_id: str
    boxes: tuple[WordBox, ...]


def otsu_threshold(image: np.ndarray) -> int:
    """Threshold maximizing between-class variance; foreground is <= t."""
    hist = np.bincount(image.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu[-1]
    denom = omega * (1.0 - omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = np.where(denom > 0, (mu_total * omega - mu) ** 2 / denom, 0.0)
    return int(np.argmax(sigma_b[:-1]))


def extract_components(
    image: np.ndarray, threshold: int | None = None
) -> list[ConnectedComponent]:
    """8-connected dark components of a grayscale raster, sorted by (y, x)."""
    img = np.asarray(image)
    if img.ndim != 2 or img.size == 0:
        raise InvariantError("segmenter input must be a non-empty 2-D grayscale raster")
    if img.dtype != np.uint8:
        img = np.clip(np.rint(img.astype(np.float64)), 0, 255).astype(np.uint8)
    t = otsu_threshold(img) if threshold is None else int(threshold)
    fg = img <= t
    if not fg.any():
        return []
    labels, count = ndimage.label(fg, structure=np.ones((3, 3), dtype=int))
    slices = ndimage.find_objects(labels)
    sizes = np.bincount(labels.ravel())
    centers = ndimage.center_of_mass(fg, labels, np.arange(1, count + 1))
    components = []
    for i, sl in enumerate(slices, start=1):
        ys, xs = sl
        cy, cx = centers[i - 1]
        components.append(
            ConnectedComponent(
                bbox=Box(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start),
                pixel_count=int(sizes[i]),
                centroid=(float(cx), float(cy)),
            )
        )
    components.sort(key=lambda c: (c.bbox.y, c.bbox.x))
    return components


def partition_components(
    ccs: list[ConnectedComponent], cfg: SegmenterConfig | None = None
) -> SizeClasses:
    """Split components into small / medium / large by height vs the median."""
    cfg = cfg or SegmenterConfig()
    if not ccs:
        raise InvariantError("partition_components requires a non-empty component list")
    median = float(np.median([c.bbox.h for c in ccs]))
    s1, s2, s3 = [], [], []
    for c in ccs:
        if c.bbox.h < cfg.small_factor * median:
            s1.append(c)
        elif c.bbox.h > cfg.large_factor * median:
            s3.append(c)
        else:
            s2.append(c)
    return SizeClasses(tuple(s1), tuple(s2), tuple(s3))


def pair_cost(
    ci: ConnectedComponent, cj: ConnectedComponent, page_scale: float
) -> float:
    """Adjacency strength in [0, 3]: y-overlap plus complemented distance/angle.

    Higher means the two components more plausibly sit side by side on one
    line; coincident centroids count as zero distance and zero angle.
    """
    if page_scale <= 0:
        raise InvariantError("page_scale must be positive")
    inter = min(ci.bbox.y2, cj.bbox.y2) - max(ci.bbox.y, cj.bbox.y)
    union = ci.bbox.h + cj.bbox.h - inter
    overlap = max(0, inter) / union if union > 0 else 0.0
    dx = cj.centroid[0] - ci.centroid[0]
    dy = cj.centroid[1] - ci.centroid[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        d_hat = 0.0
        theta_hat = 0.0
    else:
        d_hat = min(dist / page_scale, 1.0)
        theta_hat = math.atan2(abs(dy), abs(dx)) / (math.pi / 2)
    return overlap + (1.0 - d_hat) + (1.0 - theta_hat)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _slice_component(
    comp: ConnectedComponent, cuts: list[int]
) -> list[ConnectedComponent]:
    """Cut a tall component horizontally; pixel counts split by area share."""
    edges = [comp.bbox.y] + cuts + [comp.bbox.y2]
    parts = []
    for top, bottom in zip(edges, edges[1:]):
        if bottom <= top:
            continue
        h = bottom - top
        share = max(1, int(round(comp.pixel_count * h / comp.bbox.h)))
        share = min(share, comp.bbox.w * h)
        parts.append(
            ConnectedComponent(
                bbox=Box(comp.bbox.x, top, comp.bbox.w, h),
                pixel_count=share,
                centroid=(
                    comp.bbox.x + (comp.bbox.w - 1) / 2,
                    top + (h - 1) / 2,
                ),
            )
        )
    return parts


def build_lines(
    classes: SizeClasses, page_scale: float, cost_threshold: float = 1.5
) -> list[LineHypothesis]:
    """Chain medium components into lines; fold in large and small ones."""
    s2 = list(classes.s2)
    if not s2:
        return []
    uf = _UnionFind(len(s2))
    for i in range(len(s2)):
        for j in range(i + 1, len(s2)):
            if pair_cost(s2[i], s2[j], page_scale) > cost_threshold:
                uf.union(i, j)
    groups: dict[int, list[ConnectedComponent]] = {}
    for i, comp in enumerate(s2):
        groups.setdefault(uf.find(i), []).append(comp)

    # core lines ordered top to bottom by their mean member centroid y
    cores = sorted(groups.values(), key=lambda g: float(np.mean([c.centroid[1] for c in g])))
    baselines = [float(np.mean([c.centroid[1] for c in g])) for g in cores]
    bands = [
        (min(c.bbox.y for c in g), max(c.bbox.y2 for c in g)) for g in cores
    ]
    members: list[list[ConnectedComponent]] = [list(g) for g in cores]

    for comp in classes.s3:
        touched = [
            k
            for k, (top, bottom) in enumerate(bands)
            if min(comp.bbox.y2, bottom) - max(comp.bbox.y, top) > 0
        ]
        if not touched:
            nearest = min(
                range(len(cores)), key=lambda k: abs(comp.centroid[1] - baselines[k])
            )
            members[nearest].append(comp)
            continue
        if len(touched) == 1:
            members[touched[0]].append(comp)
            continue
        cuts = []
        for a, b in zip(touched, touched[1:]):
            cut = int(round((baselines[a] + baselines[b]) / 2))
            cuts.append(min(max(cut, comp.bbox.y + 1), comp.bbox.y2 - 1))
        cuts = sorted(set(cuts))
        for part in _slice_component(comp, cuts):
            k = min(touched, key=lambda t: abs(part.centroid[1] - baselines[t]))
            members[k].append(part)

    for comp in classes.s1:
        nearest = min(
            range(len(cores)), key=lambda k: abs(comp.centroid[1] - baselines[k])
        )
        members[nearest].append(comp)

    lines = []
    for index, group in enumerate(members):
        ordered = tuple(sorted(group, key=lambda c: c.centroid[0]))
        bbox = ordered[0].bbox
        for c in ordered[1:]:
            bbox = bbox.union(c.bbox)
        lines.append(LineHypothesis(line_index=index, members=ordered, bbox=bbox))
    return lines


def _median_gap(lines: list[LineHypothesis]) -> float:
    gaps = []
    for line in lines:
        running_x2 = line.members[0].bbox.x2
        for comp in line.members[1:]:
            gaps.append(max(0, comp.bbox.x - running_x2))
            running_x2 = max(running_x2, comp.bbox.x2)
    return float(np.median(gaps)) if gaps else 0.0


def group_words(
    lines: list[LineHypothesis], gap_factors: tuple[float, ...] = (1.0, 1.5, 2.0)
) -> list[WordHypothesisSet]:
    """One hypothesis set per factor; gaps <= factor * median gap merge."""
    if not gap_factors:
        raise InvariantError("group_words requires at least one gap factor")
    median_gap = _median_gap(lines)
    sets = []
    for factor in gap_factors:
        limit = factor * median_gap
        boxes: list[WordBox] = []
        for line in lines:
            words: list[list[ConnectedComponent]] = []
            running_x2: int | None = None
            for comp in line.members:
                if running_x2 is not None and comp.bbox.x - running_x2 <= limit:
                    words[-1].append(comp)
                else:
                    words.append([comp])
                running_x2 = (
                    comp.bbox.x2 if running_x2 is None else max(running_x2, comp.bbox.x2)
                )
            merged: list[Box] = []
            for group in words:
                bbox = group[0].bbox
                for c in group[1:]:
                    bbox = bbox.union(c.bbox)
                # repair pass: keep same-line boxes under 50% x-interval overlap
                if merged:
                    prev = merged[-1]
                    ix = min(prev.x2, bbox.x2) - max(prev.x, bbox.x)
                    ux = max(prev.x2, bbox.x2) - min(prev.x, bbox.x)
                    if ix > 0 and ux > 0 and ix / ux > 0.5:
                        merged[-1] = prev.union(bbox)
                        continue
                merged.append(bbox)
            for k, bbox in enumerate(merged):
                boxes.append(
                    WordBox(
                        word_id=f"L{line.line_index:03d}W{k:03d}",
                        bbox=bbox,
                        line_index=line.line_index,
                    )
                )
        sets.append(WordHypothesisSet(threshold_id=f"t{factor:g}", boxes=tuple(boxes)))
    return sets


def segment_page(
    image: np.ndarray, cfg: SegmenterConfig | None = None
) -> list[WordHypothesisSet]:
    """Full pipeline: binarize, classify, build lines, group words."""
    cfg = cfg or SegmenterConfig()
    ccs = extract_components(image, threshold=cfg.binarize_threshold)
    if not ccs:
        return [
            WordHypothesisSet(threshold_id=f"t{f:g}", boxes=())
            for f in cfg.gap_factors
        ]
    classes = partition_components(ccs, cfg)
    if not classes.s2:
        return [
            WordHypothesisSet(threshold_id=f"t{f:g}", boxes=())
            for f in cfg.gap_factors
        ]
    page_scale = cfg.page_scale_factor * float(np.median([c.bbox.h for c in classes.s2]))
    lines = build_lines(classes, page_scale, cfg.cost_threshold)
    return group_words(lines, cfg.gap_factors)


def hypotheses_to_document(
    doc_id: str, hypothesis: WordHypothesisSet, page_image: str | None = None
) -> DocumentRecord:
    """Wrap one hypothesis set as a manifest document (ids prefixed by doc)."""
    words = [
        WordBox(
            word_id=f"{doc_id}:{box.word_id}",
            bbox=box.bbox,
            line_index=box.line_index,
            label=box.label,
            stopword_prob=box.stopword_prob,
        )
        for box in hypothesis.boxes
    ]
    return DocumentRecord.from_words(doc_id, words, page_image)
