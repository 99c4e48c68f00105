"""Toy handwritten-word CNN: rendering, training, and embedding export."""

from .dataset import RenderedDataset, build_dataset, class_name_of
from .export import export_embeddings, read_manifest_word_ids, write_embeddings
from .model import HWNet, normalize_images
from .render import (
    CASE_MODES,
    FONTS,
    AugmentRanges,
    RenderError,
    RenderParams,
    apply_case,
    render_word,
)
from .stem import stem
from .train import Checkpoint, DivergenceError, load_checkpoint, save_checkpoint, train
from .trainspec import SpecError, TrainSpec, default_vocabulary, load_spec

__version__ = "0.1.0"
