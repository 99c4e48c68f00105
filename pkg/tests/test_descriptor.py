import numpy as np
import pytest
from PIL import Image, ImageDraw

from mods.descriptor import (
    DescriptorConfig,
    baseline_descriptor,
    default_lexicon,
    is_stopword,
    load_lexicon,
    synth_embed,
)
from mods.docmodel import Box, WordBox
from mods.errors import InvariantError


def glyph_image(shift=0, background=240):
    img = Image.new("L", (120, 50), background)
    d = ImageDraw.Draw(img)
    x = 20 + shift
    d.line([(x, 40), (x + 10, 10), (x + 20, 40)], fill=20, width=3)
    d.line([(x + 25, 10), (x + 25, 40)], fill=20, width=3)
    d.arc([x + 30, 15, x + 50, 40], 0, 360, fill=20, width=3)
    d.line([(x + 55, 10), (x + 70, 40)], fill=20, width=3)
    return np.asarray(img)


class TestDescriptorConfig:
    def test_default_dimension(self):
        assert DescriptorConfig().dim == 6 * 16 * 8 + 2 * 128 == 1024

    def test_profiles_togglable(self):
        assert DescriptorConfig(include_profiles=False).dim == 768

    def test_positive_dimensions_required(self):
        with pytest.raises(InvariantError):
            DescriptorConfig(grid_rows=0)


class TestBaselineDescriptor:
    def test_deterministic_bitwise(self):
        img = glyph_image()
        a = baseline_descriptor(img)
        b = baseline_descriptor(img)
        assert a.dtype == np.float32
        assert (a == b).all()

    def test_unit_norm(self):
        for image in (glyph_image(), glyph_image(background=100)):
            vec = baseline_descriptor(image)
            assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-5

    def test_resize_invariance(self):
        img = glyph_image()
        up = np.asarray(
            Image.fromarray(img).resize((240, 100), Image.Resampling.BILINEAR)
        )
        cos = float(baseline_descriptor(img) @ baseline_descriptor(up))
        assert cos >= 0.95

    def test_uniform_white_is_profile_only(self):
        vec = baseline_descriptor(np.full((40, 100), 255, dtype=np.uint8))
        assert float(np.abs(vec[:768]).max()) == 0.0
        assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-5

    def test_translation_tolerance(self):
        base = baseline_descriptor(glyph_image(0))
        for shift in (1, 2):
            moved = baseline_descriptor(glyph_image(shift))
            assert float(base @ moved) > 0.95

    def test_empty_image_rejected(self):
        with pytest.raises(InvariantError):
            baseline_descriptor(np.empty((0, 0), dtype=np.uint8))


class TestSynthEmbed:
    def test_deterministic(self):
        a = synth_embed("the", 7, 0.0)
        b = synth_embed("the", 7, 0.0)
        assert (a == b).all()

    def test_noise_zero_ignores_writer(self):
        assert (synth_embed("word", 1, 0.0) == synth_embed("word", 999, 0.0)).all()

    def test_case_folded(self):
        assert (synth_embed("Word", 0, 0.0) == synth_embed("word", 0, 0.0)).all()

    def test_unit_norm(self):
        for noise in (0.0, 0.3):
            vec = synth_embed("sample", 3, noise)
            assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-5

    def test_same_label_beats_different_label(self):
        wins = 0
        trials = 1000
        for t in range(trials):
            a = synth_embed("the", 2 * t + 1, 0.1)
            b = synth_embed("the", 2 * t + 2, 0.1)
            c = synth_embed("cat", 2 * t + 2, 0.1)
            wins += float(a @ b) > float(a @ c)
        assert wins / trials >= 0.99

    def test_different_labels_near_orthogonal(self):
        worst = 0.0
        for k in range(1000):
            va = synth_embed(f"word{2 * k}", 0, 0.0)
            vb = synth_embed(f"word{2 * k + 1}", 0, 0.0)
            worst = max(worst, abs(float(va @ vb)))
        assert worst < 0.2

    def test_validation(self):
        with pytest.raises(InvariantError):
            synth_embed("", 0, 0.0)
        with pytest.raises(InvariantError):
            synth_embed("x", 0, -0.1)


def _box(label=None, prob=None):
    return WordBox("w", Box(0, 0, 10, 10), 0, label, prob)


class TestIsStopword:
    def test_probability_above_tau(self):
        assert is_stopword(_box(prob=0.9), tau=0.5)

    def test_lexicon_label(self):
        assert is_stopword(_box(label="the"), tau=0.5, lexicon=frozenset({"the"}))

    def test_probability_overrides_label(self):
        box = _box(label="the", prob=0.1)
        assert not is_stopword(box, tau=0.5, lexicon=frozenset({"the"}))

    def test_no_evidence_keeps_word(self):
        assert not is_stopword(_box(), tau=0.5)

    def test_case_insensitive_label(self):
        assert is_stopword(_box(label="The"), tau=0.5, lexicon=frozenset({"the"}))

    def test_tau_validated(self):
        with pytest.raises(InvariantError):
            is_stopword(_box(prob=0.5), tau=1.5)

    def test_default_lexicon_has_174_words(self):
        lexicon = default_lexicon()
        assert len(lexicon) == 174
        assert {"the", "and", "of", "is"} <= lexicon

    def test_lexicon_file_parsing(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("# comment\nthe\nAnd  \n\nof # inline\n")
        assert load_lexicon(path) == frozenset({"the", "and", "of"})
