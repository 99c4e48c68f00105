"""Training specification and the default 200-word vocabulary."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .render import CASE_MODES, FONTS, AugmentRanges

LABEL_MODES = ("surface", "stem")

# content words appended to the packaged stopword lexicon to reach 200 classes
_CONTENT_WORDS = (
    "reactor", "energy", "market", "gravity", "planet", "photosynthesis",
    "molecule", "history", "printing", "machine", "colony", "nectar",
    "signal", "matrix", "vector", "theorem", "circuit", "voltage",
    "protein", "enzyme", "climate", "glacier", "harvest", "compass",
    "lantern", "meadow",
)


class SpecError(ValueError):
    pass


def packaged_stopwords() -> tuple[str, ...]:
    text = resources.files("hwnet").joinpath("data/stopwords.txt").read_text("utf-8")
    words = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.append(line.lower())
    return tuple(words)


def default_vocabulary() -> tuple[str, ...]:
    return packaged_stopwords() + _CONTENT_WORDS


@dataclass(frozen=True)
class TrainSpec:
    vocabulary: tuple[str, ...]
    fonts: tuple[str, ...] = ("script-simplex", "script-complex")
    renders_per_word: int = 20
    case_modes: tuple[str, ...] = CASE_MODES
    augment: AugmentRanges = field(default_factory=AugmentRanges)
    label_mode: str = "surface"
    epochs: int = 30
    lr_start: float = 0.1
    lr_end: float = 0.001
    batch_size: int = 64
    seed: int = 0
    stop_at_val_accuracy: float = 0.99  # early stop once validation clears this twice

    def __post_init__(self):
        if not self.vocabulary:
            raise SpecError("vocabulary must be non-empty")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise SpecError("vocabulary contains duplicates")
        if len(self.fonts) < 2:
            raise SpecError("at least two fonts are required")
        for font in self.fonts:
            if font not in FONTS:
                raise SpecError(f"unknown font {font!r}")
        if self.renders_per_word < 1:
            raise SpecError("renders_per_word must be >= 1")
        if not self.case_modes or any(m not in CASE_MODES for m in self.case_modes):
            raise SpecError(f"case modes must come from {CASE_MODES}")
        if self.label_mode not in LABEL_MODES:
            raise SpecError(f"label_mode must be one of {LABEL_MODES}")
        if self.epochs < 1 or self.batch_size < 1:
            raise SpecError("epochs and batch_size must be >= 1")
        if not 0 < self.lr_end <= self.lr_start:
            raise SpecError("need 0 < lr_end <= lr_start")


def load_spec(path: str | Path) -> TrainSpec:
    """Read a [train] INI section into a TrainSpec."""
    import configparser

    parser = configparser.ConfigParser()
    parser.read_string(Path(path).read_text(encoding="utf-8"), source=str(path))
    if not parser.has_section("train"):
        raise SpecError(f"{path}: missing [train] section")
    section = parser["train"]
    if "vocabulary_file" in section:
        words = []
        for raw in Path(section["vocabulary_file"]).read_text("utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                words.append(line.lower())
        vocabulary = tuple(words)
    else:
        vocabulary = default_vocabulary()
    fonts = tuple(
        f.strip() for f in section.get("fonts", "script-simplex,script-complex").split(",") if f.strip()
    )
    case_modes = tuple(
        m.strip() for m in section.get("case_modes", ",".join(CASE_MODES)).split(",") if m.strip()
    )
    return TrainSpec(
        vocabulary=vocabulary,
        fonts=fonts,
        renders_per_word=section.getint("renders_per_word", 20),
        case_modes=case_modes,
        label_mode=section.get("label_mode", "surface"),
        epochs=section.getint("epochs", 30),
        lr_start=section.getfloat("lr_start", 0.1),
        lr_end=section.getfloat("lr_end", 0.001),
        batch_size=section.getint("batch_size", 64),
        seed=section.getint("seed", 0),
        stop_at_val_accuracy=section.getfloat("stop_at_val_accuracy", 0.99),
    )
