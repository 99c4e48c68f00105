"""Core corpus data types and their on-disk formats.

A corpus is described by two artifacts:

* a *manifest*: line-delimited JSON, one document per line, listing every
  word bounding box in reading order (an optional leading ``manifest_meta``
  line carries corpus-level metadata);
* an *embedding store*: a little-endian binary file (magic ``MODSEMB1``)
  holding one fixed-dimension float32 vector per word id, with an optional
  stopword probability per record (NaN encodes "absent").

Both formats round-trip losslessly and serialize deterministically: equal
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import FormatError, InvariantError

EMBEDDING_MAGIC = b"MODSEMB1"
_HEADER = struct.Struct("<II")
_U16 = struct.Struct("<H")
_F32 = struct.Struct("<f")


@dataclass(frozen=True)
class Box:
    """Pixel rectangle (origin top-left, image coordinates)."""

    x: int
    y: int
    w: int
    h: int

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def iou(self, other: "Box") -> float:
        """Intersection over union of two rectangles."""
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0

    def union(self, other: "Box") -> "Box":
        x = min(self.x, other.x)
        y = min(self.y, other.y)
        return Box(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)


@dataclass(frozen=True)
class WordBox:
    """One segmented word hypothesis.

    Labels are folded to lowercase at construction so all downstream
    comparisons are case-insensitive.
    """

    word_id: str
    bbox: Box
    line_index: int
    label: str | None = None
    stopword_prob: float | None = None

    def __post_init__(self):
        if self.bbox.w <= 0 or self.bbox.h <= 0:
            raise InvariantError(
                f"word {self.word_id!r}: degenerate bbox w={self.bbox.w} h={self.bbox.h}"
            )
        if self.line_index < 0:
            raise InvariantError(f"word {self.word_id!r}: negative line_index")
        if self.stopword_prob is not None and not 0.0 <= self.stopword_prob <= 1.0:
            raise InvariantError(
                f"word {self.word_id!r}: stopword_prob {self.stopword_prob} outside [0, 1]"
            )
        if self.label is not None:
            object.__setattr__(self, "label", self.label.lower())


@dataclass(frozen=True)
class DocumentRecord:
    """One document image: word boxes in reading order plus page metadata.

    Reading order is (line_index, bbox.x); construction rejects out-of-order
    words, `from_words` sorts for you.
    """

    doc_id: str
    words: tuple[WordBox, ...]
    page_image: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        order = [(w.line_index, w.bbox.x) for w in self.words]
        if order != sorted(order):
            raise InvariantError(f"document {self.doc_id!r}: words not in reading order")
        seen: set[str] = set()
        for w in self.words:
            if w.word_id in seen:
                raise InvariantError(
                    f"document {self.doc_id!r}: duplicate word_id {w.word_id!r}"
                )
            seen.add(w.word_id)

    @property
    def word_count(self) -> int:
        return len(self.words)

    @classmethod
    def from_words(
        cls,
        doc_id: str,
        words: Iterable[WordBox],
        page_image: str | None = None,
    ) -> "DocumentRecord":
        ordered = sorted(words, key=lambda w: (w.line_index, w.bbox.x))
        return cls(doc_id, tuple(ordered), page_image)


@dataclass(frozen=True)
class CorpusManifest:
    """All documents of one corpus plus corpus-level metadata."""

    documents: tuple[DocumentRecord, ...] = ()
    name: str = ""
    embedding_dim: int | None = None
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))

    def validate(self) -> None:
        """Check cross-document invariants (doc_id uniqueness)."""
        seen: set[str] = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise InvariantError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def document(self, doc_id: str) -> DocumentRecord:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def word_locations(self) -> dict[str, list[str]]:
        """Map each word_id to the doc_ids that define it."""
        index: dict[str, list[str]] = {}
        for doc in self.documents:
            for w in doc.words:
                index.setdefault(w.word_id, []).append(doc.doc_id)
        return index


# ---------------------------------------------------------------------------
# Manifest serialization
# ---------------------------------------------------------------------------


def _word_to_json(w: WordBox) -> dict:
    obj: dict = {
        "word_id": w.word_id,
        "x": w.bbox.x,
        "y": w.bbox.y,
        "w": w.bbox.w,
        "h": w.bbox.h,
        "line": w.line_index,
    }
    if w.label is not None:
        obj["label"] = w.label
    if w.stopword_prob is not None:
        obj["stopword_prob"] = w.stopword_prob
    return obj


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, sort_keys=False)


def write_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Write a manifest; deterministic byte output for equal inputs."""
    manifest.validate()
    meta = {
        "manifest_meta": {
            "name": manifest.name,
            "embedding_dim": manifest.embedding_dim,
            "params": dict(sorted(manifest.params.items())),
        }
    }
    lines = [_dumps(meta)]
    for doc in manifest.documents:
        lines.append(
            _dumps(
                {
                    "doc_id": doc.doc_id,
                    "page_image": doc.page_image,
                    "words": [_word_to_json(w) for w in doc.words],
                }
            )
        )
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _parse_word(obj: dict, where: str) -> WordBox:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: word entry is not an object")
    word_id = _require(obj, "word_id", where)
    bbox = Box(
        int(_require(obj, "x", where)),
        int(_require(obj, "y", where)),
        int(_require(obj, "w", where)),
        int(_require(obj, "h", where)),
    )
    prob = obj.get("stopword_prob")
    return WordBox(
        word_id=str(word_id),
        bbox=bbox,
        line_index=int(_require(obj, "line", where)),
        label=obj.get("label"),
        stopword_prob=float(prob) if prob is not None else None,
    )


def read_manifest(path: str | Path) -> CorpusManifest:
    """Read and fully validate a manifest file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    name = ""
    embedding_dim: int | None = None
    params: dict[str, object] = {}
    documents: list[DocumentRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        where = f"{path.name}:{lineno}"
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{where}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"{where}: line is not an object")
        if "manifest_meta" in obj:
            if documents or embedding_dim is not None or name or params:
                raise FormatError(f"{where}: manifest_meta must be the first line")
            meta = obj["manifest_meta"]
            name = str(meta.get("name", ""))
            dim = meta.get("embedding_dim")
            embedding_dim = int(dim) if dim is not None else None
            params = dict(meta.get("params", {}))
            continue
        doc_id = str(_require(obj, "doc_id", where))
        words_raw = _require(obj, "words", where)
        if not isinstance(words_raw, list):
            raise FormatError(f"{where}: 'words' is not a list")
        words = [
            _parse_word(w, f"{where} words[{i}]") for i, w in enumerate(words_raw)
        ]
        page_image = obj.get("page_image")
        documents.append(
            DocumentRecord.from_words(
                doc_id, words, str(page_image) if page_image is not None else None
            )
        )
    manifest = CorpusManifest(
        documents=tuple(documents),
        name=name,
        embedding_dim=embedding_dim,
        params=params,
    )
    manifest.validate()
    return manifest


# ---------------------------------------------------------------------------
# Embedding store
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """Fixed-length float32 vector for one word box."""

    word_id: str
    vector: np.ndarray
    stopword_prob: float | None = None

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float32)
        if vec.ndim != 1:
            raise InvariantError(f"embedding {self.word_id!r}: vector must be 1-D")
        object.__setattr__(self, "vector", vec)
        if self.stopword_prob is not None and not 0.0 <= self.stopword_prob <= 1.0:
            raise InvariantError(
                f"embedding {self.word_id!r}: stopword_prob outside [0, 1]"
            )


class EmbeddingStore:
    """Immutable collection of same-dimension embedding records.

    Vectors are kept exactly as given; normalization happens at use sites.
    """

    def __init__(self, dim: int, records: Iterable[EmbeddingRecord] = ()):
        self._dim = int(dim)
        self._records: list[EmbeddingRecord] = []
        self._index: dict[str, int] = {}
        for rec in records:
            if rec.vector.shape[0] != self._dim:
                raise InvariantError(
                    f"embedding {rec.word_id!r}: dimension {rec.vector.shape[0]} != {self._dim}"
                )
            if rec.word_id in self._index:
                raise InvariantError(f"duplicate embedding word_id {rec.word_id!r}")
            self._index[rec.word_id] = len(self._records)
            self._records.append(rec)

    @classmethod
    def from_records(cls, records: Iterable[EmbeddingRecord]) -> "EmbeddingStore":
        records = list(records)
        if not records:
            raise InvariantError("cannot infer dimension from an empty record list")
        return cls(records[0].vector.shape[0], records)

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        return iter(self._records)

    def __contains__(self, word_id: str) -> bool:
        return word_id in self._index

    @property
    def word_ids(self) -> list[str]:
        return [rec.word_id for rec in self._records]

    def record(self, word_id: str) -> EmbeddingRecord:
        return self._records[self._index[word_id]]

    def vector(self, word_id: str) -> np.ndarray:
        return self.record(word_id).vector

    def stopword_prob(self, word_id: str) -> float | None:
        return self.record(word_id).stopword_prob

    def matrix(self, word_ids: Iterable[str] | None = None) -> np.ndarray:
        """Row matrix of vectors, in the requested (or stored) id order."""
        if word_ids is None:
            rows = [rec.vector for rec in self._records]
        else:
            rows = [self.vector(w) for w in word_ids]
        if not rows:
            return np.empty((0, self._dim), dtype=np.float32)
        return np.stack(rows)


def write_embeddings(
    store: EmbeddingStore | Iterable[EmbeddingRecord], path: str | Path
) -> None:
    """Write the MODSEMB1 binary file; validates before any bytes hit disk."""
    if not isinstance(store, EmbeddingStore):
        store = EmbeddingStore.from_records(store)
    chunks = [EMBEDDING_MAGIC, _HEADER.pack(len(store), store.dim)]
    for rec in store:
        wid = rec.word_id.encode("utf-8")
        if len(wid) > 0xFFFF:
            raise InvariantError(f"embedding {rec.word_id!r}: word_id longer than 65535 bytes")
        prob = rec.stopword_prob if rec.stopword_prob is not None else math.nan
        chunks.append(_U16.pack(len(wid)))
        chunks.append(wid)
        chunks.append(_F32.pack(prob))
        chunks.append(rec.vector.astype("<f4", copy=False).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_embeddings(path: str | Path) -> EmbeddingStore:
    """Read a MODSEMB1 file; vectors are returned exactly as stored."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(EMBEDDING_MAGIC) + _HEADER.size:
        raise FormatError(f"{path.name}: file shorter than header")
    if data[: len(EMBEDDING_MAGIC)] != EMBEDDING_MAGIC:
        raise FormatError(f"{path.name}: bad magic {data[:8]!r}")
    count, dim = _HEADER.unpack_from(data, len(EMBEDDING_MAGIC))
    offset = len(EMBEDDING_MAGIC) + _HEADER.size
    records: list[EmbeddingRecord] = []
    for i in range(count):
        try:
            (wid_len,) = _U16.unpack_from(data, offset)
            offset += _U16.size
            wid = data[offset : offset + wid_len]
            if len(wid) != wid_len:
                raise struct.error("short read")
            offset += wid_len
            (prob,) = _F32.unpack_from(data, offset)
            offset += _F32.size
            vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
            if vec.shape[0] != dim:
                raise struct.error("short read")
            offset += 4 * dim
        except struct.error as exc:
            raise FormatError(
                f"{path.name}: truncated at record {i} of {count}"
            ) from exc
        records.append(
            EmbeddingRecord(
                word_id=wid.decode("utf-8"),
                vector=vec.copy(),
                stopword_prob=None if math.isnan(prob) else float(prob),
            )
        )
    if offset != len(data):
        raise FormatError(
            f"{path.name}: {len(data) - offset} trailing bytes after {count} records"
        )
    return EmbeddingStore(dim, records)


def validate_embeddings(store: EmbeddingStore, manifest: CorpusManifest) -> None:
    """Check every store word_id resolves to exactly one manifest word box."""
    locations = manifest.word_locations()
    for word_id in store.word_ids:
        docs = locations.get(word_id)
        if not docs:
            raise InvariantError(f"embedding word_id {word_id!r} not in manifest")
        if len(docs) > 1:
            raise InvariantError(
                f"embedding word_id {word_id!r} is ambiguous across documents {docs}"
            )
