"""Tests for per-frame example building and the example cache."""

from fractions import Fraction

import numpy as np
import pytest

from artiphon.core.config import settings
from artiphon.core.exceptions import FormatError, LengthMismatchError
from artiphon.features.alignment import (
    ExampleCache,
    build_example_set,
    build_examples,
    decode_example_set,
    encode_example_set,
    frame_times,
    label_frames,
)
from artiphon.platform.phonology import Dimension, default_phoneme_map
from artiphon.platform.storage_layer import (
    Gender,
    Interval,
    Transcript,
    Utterance,
    VideoClip,
    parse_transcript,
    read_video,
    write_audio,
    write_rvf,
    write_transcript,
)


def _mismatched_utterance(root, audio_seconds, n_frames=30):
    """A 15 fps clip of ``n_frames`` frames paired with audio of another length."""
    base = root / "spk" / "utt"
    frames = np.zeros((n_frames, 16, 16), np.uint8)
    video_path = write_rvf(base.with_suffix(".rvf"), VideoClip(frames=frames, fps=Fraction(15)))
    audio_path = write_audio(base.with_suffix(".wav"), np.ones(int(audio_seconds * 16000), np.int16), 16000)
    transcript = Transcript(intervals=[Interval(start=0.5, end=0.9, phoneme="S")])
    return Utterance(
        id="utt",
        speaker_id="spk",
        gender=Gender.FEMALE,
        video_path=video_path,
        audio_path=audio_path,
        transcript_path=write_transcript(base.with_suffix(".tsv"), transcript),
        fps=Fraction(15),
        sample_rate=16000,
    )


class TestBuildExamples:
    """Tests for one utterance's examples."""

    def test_one_example_per_frame(self, tiny_corpus, alignment_config):
        """Test frame count, window length and labels."""
        utterance = tiny_corpus.utterances[0]
        video = read_video(utterance.video_path)
        transcript = parse_transcript(utterance.transcript_path)

        examples = build_examples(utterance, Dimension.VOICING, alignment_config)

        expected = label_frames(
            transcript,
            frame_times(video.n_frames, 15),
            Dimension.VOICING,
            default_phoneme_map(),
            fps=15,
        )
        assert len(examples) == video.n_frames
        assert [e.frame_index for e in examples] == list(range(video.n_frames))
        assert all(e.audio_window.shape == (1067,) for e in examples)
        assert [e.label for e in examples] == expected.labels.tolist()
        np.testing.assert_array_equal(examples[3].frame, video.frames[3])

    def test_video_only(self, tiny_corpus, alignment_config):
        """Test load_audio False leaves windows empty."""
        examples = build_examples(
            tiny_corpus.utterances[0], Dimension.MANNER, alignment_config, load_audio=False
        )

        assert all(e.audio_window is None for e in examples)

    def test_deterministic(self, tiny_corpus, alignment_config):
        """Test two builds agree exactly."""
        first = build_examples(tiny_corpus.utterances[1], Dimension.PLACE, alignment_config)
        second = build_examples(tiny_corpus.utterances[1], Dimension.PLACE, alignment_config)

        assert [e.label for e in first] == [e.label for e in second]
        np.testing.assert_array_equal(first[5].audio_window, second[5].audio_window)

    def test_length_mismatch_rejected(self, tmp_path, alignment_config):
        """Test audio a second shorter than the video."""
        utterance = _mismatched_utterance(tmp_path, audio_seconds=1.0)

        with pytest.raises(LengthMismatchError) as exc_info:
            build_examples(utterance, Dimension.VOICING, alignment_config)

        assert exc_info.value.utterance_id == "utt"

    def test_small_mismatch_truncates(self, tmp_path, alignment_config):
        """Test audio 0.2 s short drops the trailing frames."""
        utterance = _mismatched_utterance(tmp_path, audio_seconds=1.8)

        examples = build_examples(utterance, Dimension.VOICING, alignment_config)

        assert len(examples) == 27

    def test_within_one_frame_is_silent(self, tmp_path, alignment_config):
        """Test a gap under one frame period keeps every frame."""
        utterance = _mismatched_utterance(tmp_path, audio_seconds=1.96)

        examples = build_examples(utterance, Dimension.VOICING, alignment_config)

        assert len(examples) == 30
        # The last window runs past the audio and is zero-padded.
        assert examples[-1].audio_window[-1] == 0


class TestExampleSet:
    """Tests for stacked example sets."""

    def test_manifest_order_with_workers(self, tiny_corpus, alignment_config, monkeypatch):
        """Test worker count does not change the result order."""
        serial = build_example_set(tiny_corpus.utterances, Dimension.MANNER, alignment_config)
        monkeypatch.setattr(settings, "threads", 3)
        parallel = build_example_set(tiny_corpus.utterances, Dimension.MANNER, alignment_config)

        assert serial.utterance_ids == parallel.utterance_ids
        np.testing.assert_array_equal(serial.labels, parallel.labels)
        np.testing.assert_array_equal(serial.windows, parallel.windows)
        first_ids = list(dict.fromkeys(serial.utterance_ids))
        assert first_ids == [u.id for u in tiny_corpus.utterances]

    def test_select_and_unmasked(self, tiny_corpus, alignment_config):
        """Test boolean selection and dropping masked frames."""
        example_set = build_example_set(tiny_corpus.utterances[:2], Dimension.PLACE, alignment_config)

        unmasked = example_set.unmasked()

        assert len(unmasked) == int((~example_set.masked).sum())
        assert not unmasked.masked.any()
        assert unmasked.class_counts(8).sum() == len(unmasked)
        assert example_set.class_counts(8).sum() == len(unmasked)

    def test_empty_selection(self, alignment_config):
        """Test building from no utterances."""
        example_set = build_example_set([], Dimension.VOICING, alignment_config)

        assert len(example_set) == 0
        assert example_set.frames.shape == (0, 16, 16)
        assert not example_set.has_audio


class TestExampleCache:
    """Tests for the on-disk example cache."""

    def test_cache_hit(self, tiny_corpus, alignment_config, tmp_path):
        """Test a second build is served from the cache."""
        config = alignment_config.model_copy(update={"cache_dir": tmp_path / "cache"})
        utterances = tiny_corpus.utterances[:2]

        built = build_example_set(
            utterances, Dimension.VOICING, config, manifest_digest=tiny_corpus.digest
        )
        files = list((tmp_path / "cache").glob("*.acx"))
        cached = build_example_set(
            utterances, Dimension.VOICING, config, manifest_digest=tiny_corpus.digest
        )

        assert len(files) == 1
        assert cached.utterance_ids == built.utterance_ids
        np.testing.assert_array_equal(cached.frames, built.frames)
        np.testing.assert_array_equal(cached.windows, built.windows)
        np.testing.assert_array_equal(cached.masked, built.masked)

    def test_key_depends_on_inputs(self, alignment_config):
        """Test dimension, config, audio flag and map digest change the key."""
        key = ExampleCache.key("m", Dimension.VOICING, alignment_config, ["a", "b"], True, "d")

        assert key == ExampleCache.key("m", Dimension.VOICING, alignment_config, ["b", "a"], True, "d")
        assert key != ExampleCache.key("m", Dimension.PLACE, alignment_config, ["a", "b"], True, "d")
        assert key != ExampleCache.key("m", Dimension.VOICING, alignment_config, ["a", "b"], False, "d")
        other = alignment_config.model_copy(update={"window": 800})
        assert key != ExampleCache.key("m", Dimension.VOICING, other, ["a", "b"], True, "d")
        assert key != ExampleCache.key("m", Dimension.VOICING, alignment_config, ["a", "b"], True, "e")

    def test_phoneme_map_is_part_of_key(self, tiny_corpus, alignment_config, devoiced_map, tmp_path):
        """Test a changed map rebuilds labels instead of reusing the cached ones."""
        config = alignment_config.model_copy(update={"cache_dir": tmp_path / "cache"})
        utterances = tiny_corpus.utterances

        default = build_example_set(
            utterances, Dimension.VOICING, config, load_audio=False, manifest_digest=tiny_corpus.digest
        )
        edited = build_example_set(
            utterances,
            Dimension.VOICING,
            config,
            devoiced_map,
            load_audio=False,
            manifest_digest=tiny_corpus.digest,
        )
        fresh = build_example_set(utterances, Dimension.VOICING, alignment_config, devoiced_map, load_audio=False)

        assert len(list((tmp_path / "cache").glob("*.acx"))) == 2
        np.testing.assert_array_equal(edited.labels, fresh.labels)
        assert not np.array_equal(edited.labels, default.labels)

    def test_corrupt_file_is_a_miss(self, tmp_path):
        """Test an unreadable cache file is ignored."""
        cache = ExampleCache(tmp_path)
        cache.path_for("k").write_bytes(b"ACX1 garbage")

        assert cache.load("k") is None

    def test_encode_decode(self, tiny_corpus, alignment_config):
        """Test a video-only set survives encoding."""
        example_set = build_example_set(
            tiny_corpus.utterances[:1], Dimension.PLACE, alignment_config, load_audio=False
        )

        decoded = decode_example_set(encode_example_set(example_set))

        assert not decoded.has_audio
        np.testing.assert_array_equal(decoded.labels, example_set.labels)
        np.testing.assert_array_equal(decoded.frame_indices, example_set.frame_indices)

    def test_truncated_blob(self, tiny_corpus, alignment_config):
        """Test a cut-short blob."""
        example_set = build_example_set(tiny_corpus.utterances[:1], Dimension.PLACE, alignment_config)

        with pytest.raises(FormatError):
            decode_example_set(encode_example_set(example_set)[:-10])
