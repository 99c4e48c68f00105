import json

import numpy as np
import pytest

from hwnet.export import (
    ExportError,
    export_embeddings,
    read_manifest_word_ids,
)
from hwnet.render import RenderParams, render_word
from hwnet.train import train
from hwnet.trainspec import TrainSpec

VOCAB = ("look", "book", "the", "reactor")
SPEC = TrainSpec(
    vocabulary=VOCAB,
    renders_per_word=30,
    epochs=20,
    lr_start=0.05,
    lr_end=0.005,
    batch_size=16,
    seed=2,
)


@pytest.fixture(scope="module")
def checkpoint():
    return train(SPEC)


def write_manifest_lines(path, docs):
    """docs: mapping doc_id -> list of (word_id, label)."""
    lines = ['{"manifest_meta":{"name":"t","embedding_dim":null,"params":{}}}']
    for doc_id, words in docs.items():
        entries = []
        for k, (word_id, label) in enumerate(words):
            entries.append(
                {"word_id": word_id, "x": 40 + 60 * k, "y": 40, "w": 50, "h": 20,
                 "line": 0, "label": label}
            )
        lines.append(json.dumps({"doc_id": doc_id, "page_image": None, "words": entries}))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture()
def small_corpus(tmp_path):
    manifest = tmp_path / "corpus.manifest"
    docs = {
        "a": [("a:w0", "look"), ("a:w1", "the")],
        "b": [("b:w0", "reactor"), ("b:w1", "book")],
    }
    write_manifest_lines(manifest, docs)
    images = {}
    for doc_words in docs.values():
        for k, (word_id, label) in enumerate(doc_words):
            images[word_id] = render_word(label, "script-simplex", RenderParams(), 100 + k)
    return manifest, images


class TestManifestParsing:
    def test_word_ids_in_order(self, small_corpus):
        manifest, _ = small_corpus
        assert read_manifest_word_ids(manifest) == ["a:w0", "a:w1", "b:w0", "b:w1"]


class TestExport:
    def test_missing_image_names_word(self, checkpoint, small_corpus, tmp_path):
        manifest, images = small_corpus
        images = dict(images)
        del images["b:w1"]
        with pytest.raises(ExportError, match="b:w1"):
            export_embeddings(checkpoint, manifest, images, tmp_path / "out.emb")

    def test_export_is_read_back_by_the_primary_reader(
        self, checkpoint, small_corpus, tmp_path
    ):
        manifest, images = small_corpus
        out = tmp_path / "out.emb"
        meta = export_embeddings(
            checkpoint, manifest, images, out, lexicon=frozenset({"the"})
        )
        # conformance oracle: the primary component's reader and validator
        import mods

        store = mods.read_embeddings(out)
        assert store.dim == meta["dimension"] == 256
        assert store.word_ids == ["a:w0", "a:w1", "b:w0", "b:w1"]
        mods.validate_embeddings(store, mods.read_manifest(manifest))
        prob = store.stopword_prob("a:w1")
        assert prob is not None and 0.0 <= prob <= 1.0

    def test_vectors_roundtrip_bitwise(self, checkpoint, small_corpus, tmp_path):
        manifest, images = small_corpus
        out = tmp_path / "out.emb"
        export_embeddings(checkpoint, manifest, images, out)
        import torch

        import mods
        from hwnet.model import normalize_images

        store = mods.read_embeddings(out)
        model = checkpoint.build_model()
        word_ids = read_manifest_word_ids(manifest)
        with torch.no_grad():  # same batch composition as the exporter
            expected = model.hidden(
                normalize_images(np.stack([images[w] for w in word_ids]))
            ).numpy()
        for k, word_id in enumerate(word_ids):
            np.testing.assert_array_equal(
                store.vector(word_id), expected[k].astype(np.float32)
            )

    def test_metadata_sidecar(self, checkpoint, small_corpus, tmp_path):
        manifest, images = small_corpus
        out = tmp_path / "out.emb"
        export_embeddings(checkpoint, manifest, images, out)
        meta = json.loads((tmp_path / "out.emb.meta.json").read_text())
        assert meta["activation"] == "fc2_pre_relu"
        assert meta["records"] == 4

    def test_no_lexicon_means_absent_probabilities(
        self, checkpoint, small_corpus, tmp_path
    ):
        manifest, images = small_corpus
        out = tmp_path / "plain.emb"
        export_embeddings(checkpoint, manifest, images, out, lexicon=None)
        import mods

        store = mods.read_embeddings(out)
        assert all(store.stopword_prob(w) is None for w in store.word_ids)
