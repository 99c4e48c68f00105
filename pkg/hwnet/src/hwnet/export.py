"""Embedding export in the MODSEMB1 wire format.

The format: 8-byte ASCII magic "MODSEMB1", u32 LE record count, u32 LE
dimension, then per record a u16 LE word-id byte length, the UTF-8 word id,
an f32 LE stopword probability (NaN = absent), and the f32 LE vector.
Embeddings are the pre-activation output of the last hidden FC layer;
stopword probabilities sum the softmax mass of stopword classes.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

from .model import normalize_images
from .stem import stem
from .train import Checkpoint

MAGIC = b"MODSEMB1"


class ExportError(ValueError):
    pass


def read_manifest_word_ids(path: str | Path) -> list[str]:
    """Word ids of every document in a corpus manifest (JSON lines)."""
    word_ids: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ExportError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
        if "manifest_meta" in obj:
            continue
        for word in obj.get("words", []):
            word_ids.append(str(word["word_id"]))
    return word_ids


def load_lexicon(path: str | Path) -> frozenset[str]:
    words = set()
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return frozenset(words)


def write_embeddings(
    records: list[tuple[str, float | None, np.ndarray]], dim: int, path: str | Path
) -> None:
    chunks = [MAGIC, struct.pack("<II", len(records), dim)]
    for word_id, prob, vector in records:
        if vector.shape != (dim,):
            raise ExportError(f"{word_id}: vector shape {vector.shape} != ({dim},)")
        encoded = word_id.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<f", math.nan if prob is None else prob))
        chunks.append(vector.astype("<f4", copy=False).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def _stopword_class_mask(class_names, lexicon: frozenset[str]) -> np.ndarray:
    stems = {stem(w) for w in lexicon}
    return np.array(
        [name in lexicon or name in stems for name in class_names], dtype=bool
    )


def export_embeddings(
    checkpoint: Checkpoint,
    manifest_path: str | Path,
    images: Mapping[str, np.ndarray],
    out_path: str | Path,
    lexicon: frozenset[str] | None = None,
) -> dict:
    """Embed every manifest word image and write the binary store.

    Returns the export metadata, which is also written next to the store
    as ``<out>.meta.json``.
    """
    word_ids = read_manifest_word_ids(manifest_path)
    missing = [w for w in word_ids if w not in images]
    if missing:
        raise ExportError(f"no image for manifest word {missing[0]!r}")
    model = checkpoint.build_model()
    stop_mask = (
        _stopword_class_mask(checkpoint.class_names, lexicon)
        if lexicon is not None
        else None
    )

    records: list[tuple[str, float | None, np.ndarray]] = []
    with torch.no_grad():
        for start in range(0, len(word_ids), 256):
            chunk = word_ids[start : start + 256]
            batch = normalize_images(np.stack([images[w] for w in chunk]))
            hidden = model.hidden(batch)
            probs = torch.softmax(model.classifier(model.relu(hidden)), dim=1).numpy()
            vectors = hidden.numpy()
            for row, word_id in enumerate(chunk):
                prob = (
                    float(probs[row, stop_mask].sum()) if stop_mask is not None else None
                )
                if prob is not None:
                    prob = min(max(prob, 0.0), 1.0)
                records.append((word_id, prob, vectors[row]))

    dim = records[0][2].shape[0] if records else 0
    write_embeddings(records, dim, out_path)
    meta = {
        "activation": "fc2_pre_relu",
        "dimension": dim,
        "label_mode": checkpoint.label_mode,
        "records": len(records),
        "stopword_probabilities": stop_mask is not None,
        "checkpoint_test_accuracy": checkpoint.test_accuracy,
    }
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return meta
