"""Fixed-length word-image descriptors and stopword classification.

`baseline_descriptor` is the CNN-free built-in: the word crop is resized
onto a 48x128 canvas, per-cell gradient-orientation histograms are
concatenated with projection profiles, and the result is L2-normalized.
`synth_embed` produces deterministic label-derived vectors for harness
tests. `is_stopword` merges probability and lexicon evidence.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .docmodel import WordBox
from .errors import InvariantError

DEFAULT_TAU = 0.7


@dataclass(frozen=True)
class DescriptorConfig:
    height: int = 48
    width: int = 128
    grid_rows: int = 6
    grid_cols: int = 16
    orientation_bins: int = 8
    include_profiles: bool = True

    def __post_init__(self):
        for name in ("height", "width", "grid_rows", "grid_cols", "orientation_bins"):
            if getattr(self, name) <= 0:
                raise InvariantError(f"descriptor config: {name} must be positive")

    @property
    def dim(self) -> int:
        d = self.grid_rows * self.grid_cols * self.orientation_bins
        if self.include_profiles:
            d += 2 * self.width
        return d


def _to_uint8(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.size == 0:
        raise InvariantError("descriptor input must be a non-empty 2-D grayscale raster")
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr.astype(np.float64)), 0, 255).astype(np.uint8)
    return arr


def _fit_to_canvas(img: np.ndarray, cfg: DescriptorConfig) -> np.ndarray:
    h, w = img.shape
    scale = min(cfg.height / h, cfg.width / w)
    new_w = max(1, int(round(w * scale)))
    new_h = max(1, int(round(h * scale)))
    resized = np.asarray(
        Image.fromarray(img).resize((new_w, new_h), Image.Resampling.BILINEAR)
    )
    modal = int(np.bincount(img.ravel(), minlength=256).argmax())
    canvas = np.full((cfg.height, cfg.width), modal, dtype=np.uint8)
    oy = (cfg.height - new_h) // 2
    ox = (cfg.width - new_w) // 2
    canvas[oy : oy + new_h, ox : ox + new_w] = resized
    return canvas


def _orientation_histograms(canvas: np.ndarray, cfg: DescriptorConfig) -> np.ndarray:
    """Per-cell orientation histograms with bilinear cell interpolation.

    Sharing each pixel's magnitude between the four surrounding cells keeps
    the descriptor stable under small translations of the content.
    """
    f = canvas.astype(np.float64)
    gy, gx = np.gradient(f)
    mag = np.hypot(gx, gy).ravel()
    ang = np.arctan2(gy, gx).ravel()  # [-pi, pi]
    bins = np.minimum(
        ((ang + np.pi) / (2 * np.pi) * cfg.orientation_bins).astype(np.int64),
        cfg.orientation_bins - 1,
    )
    cell_h = cfg.height / cfg.grid_rows
    cell_w = cfg.width / cfg.grid_cols
    ys, xs = np.mgrid[0 : cfg.height, 0 : cfg.width]
    fy = (ys.ravel() + 0.5) / cell_h - 0.5
    fx = (xs.ravel() + 0.5) / cell_w - 0.5
    r0 = np.floor(fy).astype(np.int64)
    c0 = np.floor(fx).astype(np.int64)
    wy = fy - r0
    wx = fx - c0
    size = cfg.grid_rows * cfg.grid_cols * cfg.orientation_bins
    hist = np.zeros(size)
    for dr, wr in ((0, 1.0 - wy), (1, wy)):
        rows = np.clip(r0 + dr, 0, cfg.grid_rows - 1)
        for dc, wc in ((0, 1.0 - wx), (1, wx)):
            cols = np.clip(c0 + dc, 0, cfg.grid_cols - 1)
            flat = (rows * cfg.grid_cols + cols) * cfg.orientation_bins + bins
            hist += np.bincount(flat, weights=mag * wr * wc, minlength=size)
    return hist


def _profiles(canvas: np.ndarray, cfg: DescriptorConfig) -> np.ndarray:
    f = canvas.astype(np.float64)
    # strictly positive so the descriptor stays normalizable on any input
    vertical = (f.mean(axis=0) + 1.0) / 256.0
    horizontal = (f.mean(axis=1) + 1.0) / 256.0
    resampled = np.interp(
        np.linspace(0.0, cfg.height - 1.0, cfg.width),
        np.arange(cfg.height, dtype=np.float64),
        horizontal,
    )
    return np.concatenate([vertical, resampled])


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def baseline_descriptor(
    image: np.ndarray, cfg: DescriptorConfig | None = None
) -> np.ndarray:
    """Deterministic unit descriptor of a grayscale word image."""
    cfg = cfg or DescriptorConfig()
    canvas = _fit_to_canvas(_to_uint8(image), cfg)
    hist = _unit(_orientation_histograms(canvas, cfg))
    if cfg.include_profiles:
        prof = _unit(_profiles(canvas, cfg))
        vec = np.concatenate([hist, prof])
    else:
        vec = hist
    return _unit(vec).astype(np.float32)


def _seed_from(tag: str) -> int:
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def synth_embed(
    label: str, writer_seed: int = 0, noise: float = 0.0, dim: int = 1024
) -> np.ndarray:
    """Deterministic label-derived unit vector with writer-seeded noise.

    Same label at noise 0 gives the same vector regardless of writer;
    different labels are near-orthogonal for dim >= 128.
    """
    if not label:
        raise InvariantError("synth_embed label must be non-empty")
    if noise < 0:
        raise InvariantError("synth_embed noise must be >= 0")
    if dim < 1:
        raise InvariantError("synth_embed dim must be >= 1")
    key = label.lower()
    base_rng = np.random.default_rng(_seed_from(f"mods-synth-base:{key}"))
    vec = base_rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    if noise > 0:
        writer_rng = np.random.default_rng(
            _seed_from(f"mods-synth-writer:{key}:{writer_seed}")
        )
        bump = writer_rng.standard_normal(dim)
        bump /= np.linalg.norm(bump)
        vec = vec + noise * bump
        vec /= np.linalg.norm(vec)
    return vec.astype(np.float32)


def load_lexicon(path: str | Path) -> frozenset[str]:
    """Parse a stopword lexicon: one lowercase word per line, '#' comments."""
    words = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def default_lexicon() -> frozenset[str]:
    """The packaged 174-word English function-word list."""
    text = resources.files("mods").joinpath("data/stopwords.txt").read_text("utf-8")
    words = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return frozenset(words)


def is_stopword(
    box: WordBox, tau: float = DEFAULT_TAU, lexicon: frozenset[str] | None = None
) -> bool:
    """Probability evidence wins when present; label lookup is the fallback."""
    if not 0.0 <= tau <= 1.0:
        raise InvariantError("stopword tau must lie in [0, 1]")
    if box.stopword_prob is not None:
        return box.stopword_prob >= tau
    if box.label is not None:
        return box.label in (lexicon if lexicon is not None else default_lexicon())
    return False
