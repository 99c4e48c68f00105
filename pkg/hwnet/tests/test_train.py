import pytest

from hwnet.dataset import build_dataset
from hwnet.train import DivergenceError, load_checkpoint, save_checkpoint, train
from hwnet.trainspec import TrainSpec

TOY = TrainSpec(
    vocabulary=("look", "book"),
    renders_per_word=50,
    epochs=25,
    lr_start=0.05,
    lr_end=0.005,
    batch_size=16,
    seed=0,
)


class TestToyTraining:
    def test_two_word_problem_is_separable(self):
        checkpoint = train(TOY)
        assert checkpoint.test_accuracy >= 0.99
        assert checkpoint.log[-1]["val_accuracy"] >= checkpoint.log[0]["val_accuracy"]

    def test_log_has_one_entry_per_epoch_run(self):
        checkpoint = train(TOY)
        assert 1 <= len(checkpoint.log) <= TOY.epochs
        for k, entry in enumerate(checkpoint.log):
            assert entry["epoch"] == k
            assert entry["lr"] > 0

    def test_fixed_seed_reproduces_metrics_bitwise(self):
        spec = TrainSpec(
            vocabulary=("look", "book"),
            renders_per_word=8,
            epochs=3,
            lr_start=0.05,
            batch_size=8,
            seed=11,
            stop_at_val_accuracy=2.0,  # never stop early
        )
        first = train(spec)
        second = train(spec)
        assert first.log == second.log
        assert first.test_accuracy == second.test_accuracy

    def test_checkpoint_roundtrip(self, tmp_path):
        checkpoint = train(TOY)
        path = tmp_path / "toy.pt"
        save_checkpoint(checkpoint, path)
        back = load_checkpoint(path)
        assert back.class_names == checkpoint.class_names
        assert back.test_accuracy == checkpoint.test_accuracy
        assert back.label_mode == checkpoint.label_mode
        model = back.build_model()
        import torch

        from hwnet.model import normalize_images

        ds = build_dataset(TOY)
        with torch.no_grad():
            logits = model(normalize_images(ds.images[:4]))
        assert logits.shape == (4, 2)

    def test_stem_mode_single_class(self):
        spec = TrainSpec(
            vocabulary=("look", "looks", "looking", "looked"),
            renders_per_word=3,
            epochs=1,
            label_mode="stem",
            batch_size=8,
        )
        checkpoint = train(spec)
        assert checkpoint.class_names == ("look",)

    def test_divergence_aborts_with_epoch_number(self):
        spec = TrainSpec(
            vocabulary=("look", "book"),
            renders_per_word=8,
            epochs=4,
            lr_start=1e15,
            lr_end=1e15,
            batch_size=8,
            seed=1,
            stop_at_val_accuracy=2.0,
        )
        with pytest.raises(DivergenceError, match="epoch 0"):
            train(spec)
