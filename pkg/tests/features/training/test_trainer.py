"""Tests for the training loop."""

import json

import numpy as np
import pytest

from artiphon.core.exceptions import EmptyBatchError, NonFiniteLossError
from artiphon.features.model import LossBreakdown, Mode, ModeConfig, model_from_checkpoint
from artiphon.features.training import (
    BEST_CHECKPOINT,
    EPOCHS_FILE,
    FINAL_CHECKPOINT,
    HISTORY_FILE,
    Fold,
    TrainConfig,
    configs_digest,
    read_history,
    train,
)
from artiphon.features.training import trainer as trainer_module
from artiphon.platform.phonology import Dimension, default_phoneme_map
from artiphon.platform.storage_layer import load_checkpoint
from artiphon.platform.tensor import Tensor

FOLD = Fold(index=0, train=("spk01", "spk02"), val=("spk03",), test=("spk04",))


@pytest.fixture
def run(tiny_corpus, alignment_config, vit_config, audio_config):
    def _run(out_dir, mode=Mode.UNIV, epochs=2, fold=FOLD, patience=None, **mode_kwargs):
        mode_config = ModeConfig(
            mode=mode,
            dimension=Dimension.VOICING,
            temporal_length=4,
            projection_dim=8,
            **mode_kwargs,
        )
        return train(
            tiny_corpus,
            mode_config,
            TrainConfig(epochs=epochs, batch_size=16, lr=1e-3, seed=1, patience=patience),
            out_dir,
            alignment_config=alignment_config,
            vit_config=vit_config,
            audio_config=audio_config,
            fold=fold,
        )

    return _run


class TestTrain:
    """Tests for one training run."""

    def test_outputs_written(self, run, tmp_path):
        """Test histories and both checkpoints land in the run directory."""
        result = run(tmp_path)

        for name in (HISTORY_FILE, EPOCHS_FILE, BEST_CHECKPOINT, FINAL_CHECKPOINT):
            assert (tmp_path / name).exists()
        assert len(result.epochs) == 2
        assert result.history[-1].step == len(result.history)
        assert sum(e.steps for e in result.epochs) == len(result.history)
        assert 1 <= result.best_epoch <= 2

    def test_history_round_trip(self, run, tmp_path):
        """Test the step history reads back."""
        result = run(tmp_path)

        assert read_history(tmp_path / HISTORY_FILE) == result.history
        epochs = [json.loads(line) for line in (tmp_path / EPOCHS_FILE).read_text().splitlines()]
        assert [e["epoch"] for e in epochs] == [1, 2]

    def test_deterministic(self, run, tmp_path):
        """Test two identical runs write identical bytes."""
        run(tmp_path / "a")
        run(tmp_path / "b")

        for name in (HISTORY_FILE, BEST_CHECKPOINT, FINAL_CHECKPOINT):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parameters_move(self, run, tmp_path):
        """Test the head leaves its zero initialisation."""
        result = run(tmp_path, epochs=1)

        assert np.abs(result.model.head.weight.data).max() > 0

    def test_checkpoint_rebuilds(self, run, tmp_path):
        """Test the final checkpoint rebuilds the returned model."""
        result = run(tmp_path, epochs=1)
        checkpoint = load_checkpoint(result.final_checkpoint)

        rebuilt = model_from_checkpoint(checkpoint)

        assert checkpoint.metadata["kind"] == "final"
        assert checkpoint.metadata["fold"] == 0
        assert checkpoint.metadata["phoneme_map"] == default_phoneme_map().digest()
        np.testing.assert_array_equal(rebuilt.head.weight.data, result.model.head.weight.data)

    def test_contrast_reports_cosine_loss(self, run, tmp_path):
        """Test contrast training with λ > 0 records the cosine term."""
        result = run(tmp_path, mode=Mode.CONTRAST, epochs=1, contrastive_weight=0.5)

        assert all(r.loss_cos > 0 for r in result.history)
        for record in result.history:
            assert record.loss == pytest.approx(record.loss_cls + 0.5 * record.loss_cos)

    def test_contrast_without_weight(self, run, tmp_path):
        """Test λ = 0 trains on the classification loss alone."""
        result = run(tmp_path, mode=Mode.CONTRAST, epochs=1, contrastive_weight=0.0)

        assert all(r.loss_cos == 0.0 for r in result.history)

    def test_empty_training_split(self, run, tmp_path):
        """Test a fold with no training speakers."""
        fold = Fold(index=0, train=(), val=("spk03",), test=("spk04",))

        with pytest.raises(EmptyBatchError):
            run(tmp_path, fold=fold)

    def test_non_finite_loss(self, run, tmp_path, monkeypatch):
        """Test a NaN loss stops training and dumps the batch."""

        def nan_loss(*args, **kwargs):
            nan = Tensor(np.array(np.nan))
            return LossBreakdown(total=nan, loss_cls=float("nan"), loss_cos=0.0)

        monkeypatch.setattr(trainer_module, "total_loss", nan_loss)

        with pytest.raises(NonFiniteLossError) as exc_info:
            run(tmp_path)

        assert exc_info.value.step == 1
        dumps = list(tmp_path.glob("nonfinite_step*.npz"))
        assert [str(p) for p in dumps] == [exc_info.value.dump_path]
        assert set(np.load(dumps[0]).files) >= {"frames", "labels", "utterance_ids"}

    def test_early_stopping(self, run, tmp_path, monkeypatch):
        """Test training stops once validation stops improving."""
        monkeypatch.setattr(trainer_module, "_validation_f1", lambda *args: 0.5)

        result = run(tmp_path, epochs=5, patience=1)

        assert len(result.epochs) == 2
        assert result.best_epoch == 1


class TestConfigsDigest:
    """Tests for run identity hashing."""

    def test_order_independent(self):
        """Test keyword order does not change the digest."""
        a, b = TrainConfig(), ModeConfig()

        assert configs_digest(train=a, mode=b) == configs_digest(mode=b, train=a)
        assert len(configs_digest(train=a)) == 64

    def test_changes_with_values(self):
        """Test a changed field changes the digest."""
        assert configs_digest(train=TrainConfig(seed=1)) != configs_digest(train=TrainConfig(seed=2))
