"""Command line: render word images, train the classifier, export embeddings."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import cv2
import numpy as np

from .dataset import build_dataset
from .export import ExportError, export_embeddings, load_lexicon, read_manifest_word_ids
from .render import RenderError, render_word, apply_case
from .train import DivergenceError, load_checkpoint, save_checkpoint, train
from .trainspec import SpecError, load_spec, packaged_stopwords


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hwnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one image per manifest word")
    p.add_argument("spec")
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels", required=True,
                   help="JSON file mapping word_id -> label to render")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("train", help="build the synthetic dataset and train")
    p.add_argument("spec")
    p.add_argument("--out", required=True)

    p = sub.add_parser("export", help="embed manifest words into MODSEMB1")
    p.add_argument("checkpoint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--images", required=True, help="directory of <word_id>.png files")
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon", default=None,
                   help="stopword lexicon (default: packaged list)")
    return parser


def cmd_render(args) -> int:
    spec = load_spec(args.spec)
    labels = json.loads(Path(args.labels).read_text("utf-8"))
    word_ids = read_manifest_word_ids(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    for word_id in word_ids:
        if word_id not in labels:
            raise ExportError(f"no label provided for manifest word {word_id!r}")
        font = spec.fonts[int(rng.integers(len(spec.fonts)))]
        case_mode = spec.case_modes[int(rng.integers(len(spec.case_modes)))]
        params = spec.augment.sample(rng)
        seed = int(rng.integers(0, 2**31 - 1))
        image = render_word(apply_case(labels[word_id], case_mode), font, params, seed)
        cv2.imwrite(str(out_dir / f"{word_id.replace('/', '_')}.png"), image)
    sys.stderr.write(f"rendered {len(word_ids)} word images to {out_dir}\n")
    return 0


def cmd_train(args) -> int:
    spec = load_spec(args.spec)
    dataset = build_dataset(spec)
    checkpoint = train(spec, dataset)
    save_checkpoint(checkpoint, args.out)
    for entry in checkpoint.log:
        sys.stderr.write(
            f"epoch {entry['epoch']}: lr={entry['lr']:.4g} "
            f"train_loss={entry['train_loss']:.4f} val_loss={entry['val_loss']:.4f} "
            f"val_accuracy={entry['val_accuracy']:.4f}\n"
        )
    sys.stderr.write(f"test accuracy {checkpoint.test_accuracy:.4f} -> {args.out}\n")
    return 0


def cmd_export(args) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    image_dir = Path(args.images)
    images = {}
    for word_id in read_manifest_word_ids(args.manifest):
        path = image_dir / f"{word_id.replace('/', '_')}.png"
        if path.exists():
            images[word_id] = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    lexicon = (
        load_lexicon(args.lexicon)
        if args.lexicon
        else frozenset(packaged_stopwords())
    )
    meta = export_embeddings(checkpoint, args.manifest, images, args.out, lexicon)
    sys.stderr.write(json.dumps(meta, sort_keys=True) + "\n")
    return 0


_COMMANDS = {"render": cmd_render, "train": cmd_train, "export": cmd_export}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SpecError, RenderError, ExportError, DivergenceError) as exc:
        sys.stderr.write(f"hwnet: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"hwnet: missing file {exc.filename}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
