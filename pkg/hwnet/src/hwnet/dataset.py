"""Synthetic rendered dataset with a 75-15-10 train/validation/test split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import apply_case, render_word
from .stem import stem
from .trainspec import TrainSpec


@dataclass(frozen=True)
class RenderedDataset:
    images: np.ndarray            # (N, 48, 128) uint8
    labels: np.ndarray            # (N,) int64 class indices
    class_names: tuple[str, ...]  # index -> label string
    words: tuple[str, ...]        # vocabulary word behind each render
    fonts: tuple[str, ...]        # font used for each render
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def class_name_of(word: str, label_mode: str) -> str:
    folded = word.lower()
    return stem(folded) if label_mode == "stem" else folded


def build_dataset(spec: TrainSpec) -> RenderedDataset:
    class_names = tuple(
        sorted({class_name_of(w, spec.label_mode) for w in spec.vocabulary})
    )
    class_index = {name: k for k, name in enumerate(class_names)}
    rng = np.random.default_rng(spec.seed)

    images, labels, words, fonts = [], [], [], []
    for word in spec.vocabulary:
        for r in range(spec.renders_per_word):
            font = spec.fonts[int(rng.integers(len(spec.fonts)))]
            case_mode = spec.case_modes[int(rng.integers(len(spec.case_modes)))]
            params = spec.augment.sample(rng)
            render_seed = int(rng.integers(0, 2**31 - 1))
            image = render_word(apply_case(word, case_mode), font, params, render_seed)
            images.append(image)
            labels.append(class_index[class_name_of(word, spec.label_mode)])
            words.append(word)
            fonts.append(font)

    images_arr = np.stack(images)
    labels_arr = np.asarray(labels, dtype=np.int64)
    n = len(images)
    order = rng.permutation(n)
    n_train = int(0.75 * n)
    n_val = int(0.15 * n)
    return RenderedDataset(
        images=images_arr,
        labels=labels_arr,
        class_names=class_names,
        words=tuple(words),
        fonts=tuple(fonts),
        train_idx=np.sort(order[:n_train]),
        val_idx=np.sort(order[n_train : n_train + n_val]),
        test_idx=np.sort(order[n_train + n_val :]),
    )
