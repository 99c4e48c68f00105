"""Training loop: SGD with momentum, log-spaced learning-rate decay,
per-epoch validation logging, divergence detection, checkpoint IO."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .dataset import RenderedDataset, build_dataset
from .model import HWNet, normalize_images
from .trainspec import TrainSpec


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    state_dict: dict
    class_names: tuple[str, ...]
    label_mode: str
    log: tuple[dict, ...]
    test_accuracy: float
    seed: int

    def build_model(self) -> HWNet:
        model = HWNet(len(self.class_names))
        model.load_state_dict(self.state_dict)
        model.eval()
        return model


def _accuracy(model: HWNet, images: torch.Tensor, labels: torch.Tensor) -> float:
    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(images), 256):
            logits = model(images[start : start + 256])
            correct += int((logits.argmax(dim=1) == labels[start : start + 256]).sum())
    return correct / max(len(images), 1)


def _mean_loss(model: HWNet, images, labels, loss_fn) -> float:
    model.eval()
    total = 0.0
    with torch.no_grad():
        for start in range(0, len(images), 256):
            batch = images[start : start + 256]
            total += float(loss_fn(model(batch), labels[start : start + 256])) * len(batch)
    return total / max(len(images), 1)


def train(spec: TrainSpec, dataset: RenderedDataset | None = None) -> Checkpoint:
    """Train to the spec; returns a checkpoint with the epoch log attached."""
    torch.manual_seed(spec.seed)
    torch.use_deterministic_algorithms(True)
    if dataset is None:
        dataset = build_dataset(spec)

    images = normalize_images(dataset.images)
    labels = torch.as_tensor(dataset.labels)
    train_x = images[dataset.train_idx]
    train_y = labels[dataset.train_idx]
    val_x = images[dataset.val_idx]
    val_y = labels[dataset.val_idx]
    test_x = images[dataset.test_idx]
    test_y = labels[dataset.test_idx]

    model = HWNet(len(dataset.class_names))
    loss_fn = nn.CrossEntropyLoss()
    schedule = np.logspace(
        math.log10(spec.lr_start), math.log10(spec.lr_end), spec.epochs
    )
    optimizer = torch.optim.SGD(model.parameters(), lr=spec.lr_start, momentum=0.9)
    shuffle_rng = np.random.default_rng(spec.seed + 1)

    log: list[dict] = []
    best_val = -1.0
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    hits_in_a_row = 0
    for epoch in range(spec.epochs):
        lr = float(schedule[epoch])
        for group in optimizer.param_groups:
            group["lr"] = lr
        model.train()
        order = shuffle_rng.permutation(len(train_x))
        epoch_loss = 0.0
        for start in range(0, len(order), spec.batch_size):
            batch = order[start : start + spec.batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(train_x[batch]), train_y[batch])
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch)
        val_loss = _mean_loss(model, val_x, val_y, loss_fn) if len(val_x) else 0.0
        if math.isnan(val_loss) or math.isinf(val_loss):
            raise DivergenceError(f"validation loss diverged at epoch {epoch}")
        val_accuracy = _accuracy(model, val_x, val_y) if len(val_x) else 1.0
        log.append(
            {
                "epoch": epoch,
                "lr": lr,
                "train_loss": epoch_loss / max(len(order), 1),
                "val_loss": val_loss,
                "val_accuracy": val_accuracy,
            }
        )
        if val_accuracy >= best_val:
            best_val = val_accuracy
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
        # stop once validation clears the bar twice in a row
        hits_in_a_row = hits_in_a_row + 1 if val_accuracy >= spec.stop_at_val_accuracy else 0
        if hits_in_a_row >= 2:
            break

    model.load_state_dict(best_state)
    test_accuracy = _accuracy(model, test_x, test_y) if len(test_x) else 1.0
    return Checkpoint(
        state_dict=best_state,
        class_names=dataset.class_names,
        label_mode=spec.label_mode,
        log=tuple(log),
        test_accuracy=test_accuracy,
        seed=spec.seed,
    )


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    torch.save(
        {
            "state_dict": checkpoint.state_dict,
            "class_names": list(checkpoint.class_names),
            "label_mode": checkpoint.label_mode,
            "log": list(checkpoint.log),
            "test_accuracy": checkpoint.test_accuracy,
            "seed": checkpoint.seed,
        },
        str(path),
    )


def load_checkpoint(path: str | Path) -> Checkpoint:
    payload = torch.load(str(path), map_location="cpu", weights_only=False)
    return Checkpoint(
        state_dict=payload["state_dict"],
        class_names=tuple(payload["class_names"]),
        label_mode=payload["label_mode"],
        log=tuple(payload["log"]),
        test_accuracy=payload["test_accuracy"],
        seed=payload["seed"],
    )
