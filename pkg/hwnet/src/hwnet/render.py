"""Synthetic handwritten-style word rendering onto a fixed 48x128 canvas.

Words are drawn character by character with the built-in stroke ("Hershey")
script fonts, varying kerning, stroke width, and foreground/background
intensities, with Gaussian smoothing applied last. Rendering is fully
deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

CANVAS_HEIGHT = 48
CANVAS_WIDTH = 128

FONTS = {
    "script-simplex": cv2.FONT_HERSHEY_SCRIPT_SIMPLEX,
    "script-complex": cv2.FONT_HERSHEY_SCRIPT_COMPLEX,
    "plain": cv2.FONT_HERSHEY_PLAIN,
    "duplex": cv2.FONT_HERSHEY_DUPLEX,
}

CASE_MODES = ("lower", "upper", "capitalize")


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderParams:
    """One render's augmentation knobs."""

    kerning: int = 2          # extra pixels between characters
    stroke: int = 2           # stroke thickness in pixels
    foreground: int = 30      # mean ink intensity
    background: int = 235     # mean paper intensity
    blur_sigma: float = 0.8   # Gaussian smoothing, applied last
    jitter: int = 1           # per-character vertical jitter amplitude

    def __post_init__(self):
        if self.kerning < 0 or self.stroke < 1 or self.jitter < 0:
            raise RenderError("kerning/stroke/jitter out of range")
        if not 0 <= self.foreground < self.background <= 255:
            raise RenderError("need 0 <= foreground < background <= 255")
        if self.blur_sigma < 0:
            raise RenderError("blur_sigma must be >= 0")


def apply_case(word: str, mode: str) -> str:
    if mode == "lower":
        return word.lower()
    if mode == "upper":
        return word.upper()
    if mode == "capitalize":
        return word.capitalize()
    raise RenderError(f"unknown case mode {mode!r}")


def _check_glyphs(text: str, font_name: str) -> None:
    for ch in text:
        if not 32 <= ord(ch) <= 126:
            raise RenderError(
                f"character {ch!r} has no glyph in font {font_name!r}"
            )


def render_word(
    word: str, font: str, params: RenderParams, seed: int
) -> np.ndarray:
    """Render one word; returns a (48, 128) uint8 grayscale image."""
    if not word:
        raise RenderError("cannot render an empty word")
    if font not in FONTS:
        raise RenderError(f"unknown font {font!r} (have {sorted(FONTS)})")
    _check_glyphs(word, font)
    face = FONTS[font]
    rng = np.random.default_rng(seed)

    base_sizes = [cv2.getTextSize(ch, face, 1.0, params.stroke) for ch in word]
    base_width = sum(w for (w, _), _ in base_sizes) + params.kerning * (len(word) - 1)
    base_height = max(h for (_, h), _ in base_sizes)
    scale = min(
        (CANVAS_WIDTH - 8) / max(base_width, 1),
        (CANVAS_HEIGHT - 14) / max(base_height, 1),
    )
    scale = max(scale, 0.05)

    canvas = np.full((CANVAS_HEIGHT, CANVAS_WIDTH), params.background, dtype=np.uint8)
    sizes = [cv2.getTextSize(ch, face, scale, params.stroke) for ch in word]
    text_width = sum(w for (w, _), _ in sizes) + params.kerning * (len(word) - 1)
    text_height = max(h for (_, h), _ in sizes)
    x = max((CANVAS_WIDTH - text_width) // 2, 2)
    baseline_y = (CANVAS_HEIGHT + text_height) // 2
    for ch, ((ch_w, _), _) in zip(word, sizes):
        dy = int(rng.integers(-params.jitter, params.jitter + 1)) if params.jitter else 0
        cv2.putText(
            canvas,
            ch,
            (x, baseline_y + dy),
            face,
            scale,
            int(params.foreground),
            params.stroke,
            cv2.LINE_AA,
        )
        x += ch_w + params.kerning
    if params.blur_sigma > 0:
        canvas = cv2.GaussianBlur(canvas, (0, 0), params.blur_sigma)
    return canvas


@dataclass(frozen=True)
class AugmentRanges:
    """Sampling ranges for per-render augmentation."""

    kerning: tuple[int, int] = (1, 4)
    stroke: tuple[int, int] = (1, 3)
    foreground: tuple[int, int] = (10, 70)
    background: tuple[int, int] = (200, 250)
    blur_sigma: tuple[float, float] = (0.4, 1.4)

    def sample(self, rng: np.random.Generator) -> RenderParams:
        return RenderParams(
            kerning=int(rng.integers(self.kerning[0], self.kerning[1] + 1)),
            stroke=int(rng.integers(self.stroke[0], self.stroke[1] + 1)),
            foreground=int(rng.integers(self.foreground[0], self.foreground[1] + 1)),
            background=int(rng.integers(self.background[0], self.background[1] + 1)),
            blur_sigma=float(rng.uniform(self.blur_sigma[0], self.blur_sigma[1])),
        )
