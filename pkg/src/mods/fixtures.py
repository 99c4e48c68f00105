"""Synthetic plagiarism-graded corpora for the evaluation harness.

Each source text spawns derived documents at four copy grades: verbatim
(3), light revision with ~10% synonym swaps (2), heavy revision with
shuffled sentence chunks and ~25% swaps (1), and unrelated text over a
per-source topic vocabulary (0). Layout, embeddings, and ground truth are
all derived from one seed, so regeneration is byte-identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .descriptor import synth_embed
from .docmodel import (
    Box,
    CorpusManifest,
    DocumentRecord,
    EmbeddingRecord,
    EmbeddingStore,
    WordBox,
)
from .errors import FormatError, InvariantError

DEGREES = ("near_copy", "light", "heavy", "none")
GRADE_OF = {"near_copy": 3, "light": 2, "heavy": 1, "none": 0}

_TOKEN_RE = re.compile(r"[a-z]+")
_FILLER_WORDS = ("the", "of", "and", "a", "to", "in", "is", "that", "it", "as")


@dataclass(frozen=True)
class FixtureSpec:
    sources: tuple[str, ...]
    degrees: tuple[str, ...] = ()     # degree of each derived doc, per source
    words_per_line: int = 10
    noise: float = 0.0
    dim: int = 256
    seed: int = 0
    light_replace_frac: float = 0.10
    heavy_replace_frac: float = 0.25
    heavy_chunk_words: int = 12

    def __post_init__(self):
        if not self.sources:
            raise InvariantError("fixture spec needs at least one source text")
        if any(not s.strip() for s in self.sources):
            raise InvariantError("fixture source texts must be non-empty")
        for degree in self.degrees:
            if degree not in DEGREES:
                raise InvariantError(f"unknown plagiarism degree {degree!r}")
        if self.words_per_line < 1:
            raise InvariantError("words_per_line must be >= 1")
        if self.noise < 0:
            raise InvariantError("noise must be >= 0")
        if self.dim < 1:
            raise InvariantError("embedding dim must be >= 1")


def tokenize(text: str) -> list[str]:
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise InvariantError("source text contains no words")
    return tokens


def layout_document(
    doc_id: str, tokens: list[str], words_per_line: int
) -> DocumentRecord:
    """Flow tokens into lines of fixed width with synthetic geometry."""
    words = []
    for k, token in enumerate(tokens):
        line = k // words_per_line
        col = k % words_per_line
        x = 40 + col * 150
        words.append(
            WordBox(
                word_id=f"{doc_id}:w{k:04d}",
                bbox=Box(x, 40 + line * 36, 14 * max(1, len(token)), 24),
                line_index=line,
                label=token,
            )
        )
    return DocumentRecord.from_words(doc_id, words)


def reflow_line_breaks(doc: DocumentRecord) -> DocumentRecord:
    """Move each line's last word to the start of the following line.

    Content, word ids and labels are unchanged; only line assignment and
    geometry shift, mimicking a writer overflowing words across lines.
    """
    by_line: dict[int, list[WordBox]] = {}
    for w in doc.words:
        by_line.setdefault(w.line_index, []).append(w)
    line_indices = sorted(by_line)
    new_lines: dict[int, list[WordBox]] = {li: [] for li in line_indices}
    for pos, li in enumerate(line_indices):
        row = by_line[li]
        is_last_line = pos == len(line_indices) - 1
        body = row if is_last_line else row[:-1]
        new_lines[li].extend(body)
        if not is_last_line:
            new_lines[line_indices[pos + 1]].insert(0, row[-1])
    words = []
    for li in line_indices:
        for col, w in enumerate(new_lines[li]):
            x = 40 + col * 150
            words.append(
                WordBox(
                    word_id=w.word_id,
                    bbox=Box(x, w.bbox.y, w.bbox.w, w.bbox.h),
                    line_index=li,
                    label=w.label,
                    stopword_prob=w.stopword_prob,
                )
            )
    return DocumentRecord.from_words(doc.doc_id, words, doc.page_image)


def _synonym(token: str) -> str:
    return f"syn-{token}"


def _light_revision(tokens: list[str], frac: float, rng: np.random.Generator) -> list[str]:
    out = list(tokens)
    n_swap = int(round(len(tokens) * frac))
    positions = rng.choice(len(tokens), size=min(n_swap, len(tokens)), replace=False)
    for pos in sorted(int(p) for p in positions):
        out[pos] = _synonym(out[pos])
    return out


def _heavy_revision(
    tokens: list[str], frac: float, chunk: int, rng: np.random.Generator
) -> list[str]:
    chunks = [tokens[i : i + chunk] for i in range(0, len(tokens), chunk)]
    order = rng.permutation(len(chunks))
    shuffled = [t for k in order for t in chunks[int(k)]]
    return _light_revision(shuffled, frac, rng)


def _unrelated(
    length: int, source_index: int, rng: np.random.Generator
) -> list[str]:
    pool = [f"q{source_index}x{k:03d}" for k in range(300)]
    out = []
    for _ in range(length):
        if rng.random() < 0.25:
            out.append(_FILLER_WORDS[int(rng.integers(len(_FILLER_WORDS)))])
        else:
            out.append(pool[int(rng.integers(len(pool)))])
    return out


def gen_fixtures(
    spec: FixtureSpec,
) -> tuple[CorpusManifest, EmbeddingStore, list[tuple[str, str, int]]]:
    """Build (manifest, embeddings, truth triples) from one seeded spec."""
    rng = np.random.default_rng(spec.seed)
    documents: list[DocumentRecord] = []
    derived_source: dict[str, int] = {}
    degree_of: dict[str, str] = {}
    source_ids = []

    token_lists: dict[str, list[str]] = {}
    writer_of: dict[str, int] = {}
    counter = 0
    for i, text in enumerate(spec.sources):
        doc_id = f"src{i}"
        source_ids.append(doc_id)
        tokens = tokenize(text)
        token_lists[doc_id] = tokens
        writer_of[doc_id] = spec.seed * 1_000_003 + counter
        counter += 1
        documents.append(layout_document(doc_id, tokens, spec.words_per_line))
        for j, degree in enumerate(spec.degrees):
            derived_id = f"src{i}_d{j:02d}_{degree}"
            if degree == "near_copy":
                derived_tokens = list(tokens)
            elif degree == "light":
                derived_tokens = _light_revision(tokens, spec.light_replace_frac, rng)
            elif degree == "heavy":
                derived_tokens = _heavy_revision(
                    tokens, spec.heavy_replace_frac, spec.heavy_chunk_words, rng
                )
            else:
                derived_tokens = _unrelated(len(tokens), i, rng)
            derived_source[derived_id] = i
            degree_of[derived_id] = degree
            writer_of[derived_id] = spec.seed * 1_000_003 + counter
            counter += 1
            token_lists[derived_id] = derived_tokens
            documents.append(
                layout_document(derived_id, derived_tokens, spec.words_per_line)
            )

    records = []
    for doc in documents:
        writer = writer_of[doc.doc_id]
        for w in doc.words:
            records.append(
                EmbeddingRecord(
                    word_id=w.word_id,
                    vector=synth_embed(w.label, writer, spec.noise, spec.dim),
                )
            )
    store = EmbeddingStore(spec.dim, records)

    truth: list[tuple[str, str, int]] = []
    for i, source_id in enumerate(source_ids):
        for doc in documents:
            if doc.doc_id == source_id:
                continue
            if derived_source.get(doc.doc_id) == i:
                grade = GRADE_OF[degree_of[doc.doc_id]]
            else:
                grade = 0
            truth.append((source_id, doc.doc_id, grade))

    manifest = CorpusManifest(
        documents=tuple(documents),
        name=f"fixture-seed{spec.seed}",
        embedding_dim=spec.dim,
        params={
            "degrees": ",".join(spec.degrees),
            "noise": repr(spec.noise),
            "seed": str(spec.seed),
            "sources": str(len(spec.sources)),
            "words_per_line": str(spec.words_per_line),
        },
    )
    return manifest, store, truth


def write_truth(truth: list[tuple[str, str, int]], path: str | Path) -> None:
    lines = [f"{q}\t{t}\t{g}" for q, t, g in truth]
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def read_truth(path: str | Path) -> list[tuple[str, str, int]]:
    triples = []
    for lineno, raw in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise FormatError(f"{Path(path).name}:{lineno}: expected 3 tab-separated fields")
        try:
            grade = int(parts[2])
        except ValueError as exc:
            raise FormatError(f"{Path(path).name}:{lineno}: bad grade {parts[2]!r}") from exc
        triples.append((parts[0], parts[1], grade))
    return triples


def packaged_sources() -> tuple[str, ...]:
    """The five built-in source paragraphs (blank-line separated on disk)."""
    text = resources.files("mods").joinpath("data/docsim_sources.txt").read_text("utf-8")
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    return tuple(p for p in paragraphs if not p.startswith("#"))


def docsim_spec(noise: float = 0.15, seed: int = 0, dim: int = 256) -> FixtureSpec:
    """The 100-document benchmark layout: 5 sources x 19 derived documents."""
    degrees = ("near_copy",) * 5 + ("light",) * 5 + ("heavy",) * 5 + ("none",) * 4
    return FixtureSpec(
        sources=packaged_sources(),
        degrees=degrees,
        words_per_line=10,
        noise=noise,
        dim=dim,
        seed=seed,
    )
