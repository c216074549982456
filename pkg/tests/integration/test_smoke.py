"""End-to-end runs over freshly synthesized corpora."""

import numpy as np
import pytest

from artiphon.features.alignment import AlignmentConfig, build_example_set
from artiphon.features.corpus import SynthSpec, synthesize_corpus
from artiphon.features.evaluation import evaluate_examples, majority_baseline
from artiphon.features.model import Mode, ModeConfig, model_from_checkpoint
from artiphon.features.training import Split, TrainConfig, make_folds, train
from artiphon.platform.phonology import Dimension
from artiphon.platform.storage_layer import load_checkpoint, load_manifest


class TestContrastWithoutAudio:
    """Tests for inference after the audio is gone."""

    def test_eval_after_audio_removed(self, tmp_path, tiny_spec, alignment_config, vit_config, audio_config):
        """Test a contrast checkpoint scores a corpus whose WAV files were deleted."""
        corpus = tmp_path / "corpus"
        spec = tiny_spec.model_copy(update={"n_speakers": 6})
        manifest = synthesize_corpus(spec, corpus)
        mode_config = ModeConfig(
            mode=Mode.CONTRAST, dimension=Dimension.VOICING, temporal_length=4, projection_dim=8
        )
        result = train(
            manifest,
            mode_config,
            TrainConfig(epochs=1, k=3, seed=0),
            tmp_path / "run",
            alignment_config=alignment_config,
            vit_config=vit_config,
            audio_config=audio_config,
        )
        for wav in corpus.rglob("*.wav"):
            wav.unlink()

        stripped = load_manifest(corpus / "manifest.json", require_audio=False)
        model = model_from_checkpoint(load_checkpoint(result.best_checkpoint))
        fold = make_folds(stripped.speakers(), k=3, seed=0).fold(0)
        examples = build_example_set(
            fold.utterances(stripped, Split.TEST),
            Dimension.VOICING,
            alignment_config,
            load_audio=False,
        )

        summary = evaluate_examples(model, examples)

        assert summary.frames == int((~examples.masked).sum()) > 0


@pytest.mark.slow
class TestDeskRun:
    """Tests for a desk-scale contrast run on the voicing task."""

    def test_beats_majority_baseline(self, tmp_path):
        """Test loss falls and held-out macro-F1 is well above the majority class."""
        manifest = synthesize_corpus(SynthSpec(), tmp_path / "corpus")
        alignment = AlignmentConfig(image_size=64)
        train_config = TrainConfig(epochs=5, seed=0)
        result = train(
            manifest,
            ModeConfig(mode=Mode.CONTRAST, dimension=Dimension.VOICING),
            train_config,
            tmp_path / "run",
            alignment_config=alignment,
        )

        fold = make_folds(manifest.speakers(), train_config.k, train_config.seed).fold(0)
        train_set = build_example_set(
            fold.utterances(manifest, Split.TRAIN), Dimension.VOICING, alignment, load_audio=False
        )
        test_set = build_example_set(
            fold.utterances(manifest, Split.TEST), Dimension.VOICING, alignment, load_audio=False
        )
        model = model_from_checkpoint(load_checkpoint(result.best_checkpoint))

        summary = evaluate_examples(model, test_set)
        baseline = majority_baseline(
            test_set.labels, ~test_set.masked, 3, reference_labels=train_set.labels[~train_set.masked]
        )

        assert result.epochs[2].mean_loss < result.epochs[0].mean_loss
        assert len(train_set) + len(test_set) > 0
        assert summary.macro.f1 >= 1.5 * baseline
        assert np.isfinite(summary.macro.f1)
