"""Tests for the four-mode frame classifier and checkpoint rebuilds."""

import numpy as np
import pytest

from artiphon.core.exceptions import CheckpointError, ConfigurationError, WrongModeError
from artiphon.features.model import (
    ClassifierModel,
    Mode,
    ModeConfig,
    import_audio_weights,
    model_from_checkpoint,
    predict_contrastive,
    total_loss,
)
from artiphon.platform.phonology import Dimension
from artiphon.platform.storage_layer import Checkpoint
from artiphon.platform.tensor import Tape, backward

W = 1067
HASH = "cd" * 32
EPS = 1e-6


@pytest.fixture
def build(vit_config, audio_config):
    def _build(mode, dimension=Dimension.MANNER, seed=0, **kwargs):
        mode_config = ModeConfig(
            mode=mode, dimension=dimension, temporal_length=4, projection_dim=8, **kwargs
        )
        return ClassifierModel(mode_config, vit_config, audio_config, W, np.random.default_rng(seed))

    return _build


@pytest.fixture
def batch(rng):
    frames = rng.integers(0, 256, (3, 16, 16)).astype(np.uint8)
    windows = rng.integers(-2000, 2000, (3, W)).astype(np.int16)
    return frames, windows


def _randomize_head(model, seed=1):
    head_rng = np.random.default_rng(seed)
    model.head.weight.assign(head_rng.normal(size=model.head.weight.shape))
    model.head.bias.assign(head_rng.normal(size=model.head.bias.shape))


class TestClassifierModel:
    """Tests for forward passes and per-mode structure."""

    @pytest.mark.parametrize("mode", list(Mode))
    def test_logits_shape(self, build, batch, mode):
        """Test every mode produces [B, C] logits."""
        frames, windows = batch
        model = build(mode)

        out = model(frames, windows)

        assert out.logits.shape == (3, 6)

    def test_zero_initialised_head(self, build, batch):
        """Test a fresh model predicts uniform logits."""
        frames, _ = batch

        np.testing.assert_array_equal(build(Mode.UNIV)(frames).logits.numpy(), np.zeros((3, 6)))

    @pytest.mark.parametrize(
        "mode, present, absent",
        [
            (Mode.UNIV, {"vit."}, {"audio_encoder.", "audio_pool.", "image_proj."}),
            (Mode.UNIA, {"audio_encoder.", "audio_pool."}, {"vit.", "image_proj."}),
            (Mode.FUSION, {"vit.", "audio_encoder.", "audio_pool."}, {"image_proj."}),
            (Mode.CONTRAST, {"vit.", "audio_encoder.", "image_proj.", "audio_proj."}, {"audio_pool."}),
        ],
    )
    def test_only_used_modules_built(self, build, mode, present, absent):
        """Test parameter names follow the mode."""
        names = [name for name, _ in build(mode).named_parameters()]

        for prefix in present:
            assert any(n.startswith(prefix) for n in names)
        for prefix in absent:
            assert not any(n.startswith(prefix) for n in names)
        assert "class_weights.logits" in names

    def test_audio_encoder_frozen(self, build):
        """Test the speech encoder starts frozen and the head does not."""
        model = build(Mode.FUSION)

        assert all(p.frozen for p in model.audio_encoder.parameters())
        assert not model.head.weight.frozen

    def test_contrast_projections(self, build, batch):
        """Test contrast mode returns matching projections with audio."""
        frames, windows = batch
        model = build(Mode.CONTRAST)

        with_audio = model(frames, windows)
        without_audio = model(frames)

        assert with_audio.img.shape == (3, 4, 8)
        assert with_audio.aud.shape == (3, 4, 8)
        assert without_audio.aud is None

    def test_dimension_required(self, vit_config, audio_config, rng):
        """Test a model cannot be built without a dimension."""
        with pytest.raises(ConfigurationError):
            ClassifierModel(ModeConfig(mode=Mode.UNIV), vit_config, audio_config, W, rng)

    def test_audio_mode_needs_windows(self, build, batch):
        """Test unia without windows."""
        frames, _ = batch

        with pytest.raises(ConfigurationError):
            build(Mode.UNIA)(frames)

    def test_predict_contrastive_wrong_mode(self, build, batch):
        """Test video-only prediction needs a contrast model."""
        frames, _ = batch

        with pytest.raises(WrongModeError):
            predict_contrastive(build(Mode.FUSION), frames)

    def test_contrast_inference_is_video_only(self, build, batch):
        """Test contrast logits ignore audio at inference."""
        frames, windows = batch
        model = build(Mode.CONTRAST)
        _randomize_head(model)

        from_frames = model.predict_logits(frames)
        with_audio = model.predict_logits(frames, windows)

        np.testing.assert_array_equal(from_frames, with_audio)

    def test_predict_restores_training_flag(self, build, batch):
        """Test prediction switches to eval and back."""
        frames, _ = batch
        model = build(Mode.UNIV)

        model.predict_logits(frames)

        assert model.training
        assert model.vit.training


class TestCheckpointRebuild:
    """Tests for rebuilding models and importing speech weights."""

    @pytest.mark.parametrize("mode", list(Mode))
    def test_rebuild_predicts_identically(self, build, batch, mode):
        """Test a model rebuilt from a checkpoint gives the same logits."""
        frames, windows = batch
        model = build(mode, dimension=Dimension.PLACE, seed=4)
        _randomize_head(model)
        checkpoint = Checkpoint(config_hash=HASH, metadata=model.metadata(), params=model.state_dict())

        rebuilt = model_from_checkpoint(checkpoint)

        assert rebuilt.mode == mode
        np.testing.assert_array_equal(
            rebuilt.predict_logits(frames, windows), model.predict_logits(frames, windows)
        )

    def test_missing_metadata(self, build):
        """Test a checkpoint without model metadata."""
        checkpoint = Checkpoint(config_hash=HASH, params=build(Mode.UNIV).state_dict())

        with pytest.raises(CheckpointError):
            model_from_checkpoint(checkpoint)

    def test_import_audio_weights(self, build):
        """Test speech weights move between modes and stay frozen."""
        source = build(Mode.FUSION, seed=10)
        target = build(Mode.CONTRAST, seed=20)
        checkpoint = Checkpoint(config_hash=HASH, params=source.state_dict())

        loaded = import_audio_weights(target, checkpoint)

        assert loaded == len(source.audio_encoder.parameters())
        np.testing.assert_array_equal(
            target.audio_encoder.feature_proj.weight.data, source.audio_encoder.feature_proj.weight.data
        )
        assert all(p.frozen for p in target.audio_encoder.parameters())

    def test_import_into_video_model(self, build):
        """Test a univ model has nowhere to put speech weights."""
        checkpoint = Checkpoint(config_hash=HASH, params=build(Mode.FUSION).state_dict())

        with pytest.raises(CheckpointError):
            import_audio_weights(build(Mode.UNIV), checkpoint)

    def test_import_without_audio_params(self, build):
        """Test a checkpoint with no speech encoder."""
        checkpoint = Checkpoint(config_hash=HASH, params=build(Mode.UNIV).state_dict())

        with pytest.raises(CheckpointError):
            import_audio_weights(build(Mode.CONTRAST), checkpoint)


class TestLossGradients:
    """End-to-end gradient checks of the training loss."""

    @pytest.mark.parametrize("mode", list(Mode))
    def test_total_loss_matches_finite_differences(self, build, batch, mode):
        """Test tape gradients of the total loss at 200 random parameter coordinates."""
        frames, windows = batch
        model = build(mode, seed=3)
        _randomize_head(model)
        model.unfreeze()
        model.eval()
        labels = np.array([0, 3, 5])
        mask = np.array([True, False, True])
        config = model.mode_config

        def loss_value():
            out = model(frames, windows)
            return total_loss(
                out.logits,
                labels,
                mask,
                model.class_weight_vector(),
                out.img,
                out.aud,
                config.contrastive_weight,
                config.negatives,
                config.margin,
            ).total

        params = model.parameters()
        with Tape() as tape:
            grads = backward(tape, loss_value(), params)

        sizes = np.array([p.data.size for p in params])
        picks = np.random.default_rng(7).choice(sizes.sum(), size=200, replace=False)
        offsets = np.cumsum(sizes) - sizes
        for flat in picks:
            i = int(np.searchsorted(offsets, flat, side="right") - 1)
            index = np.unravel_index(int(flat - offsets[i]), params[i].shape)
            original = params[i].data[index]
            params[i].data[index] = original + EPS
            up = loss_value().item()
            params[i].data[index] = original - EPS
            down = loss_value().item()
            params[i].data[index] = original

            assert grads[i][index] == pytest.approx((up - down) / (2 * EPS), rel=1e-4, abs=1e-7), params[i].name
