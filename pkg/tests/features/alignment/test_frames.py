"""Tests for frame timing, audio windows and frame labels."""

from fractions import Fraction

import numpy as np
import pytest

from artiphon.features.alignment import (
    audio_window,
    extract_window,
    frame_midpoints,
    frame_times,
    label_frames,
    phonemes_at,
    window_length,
)
from artiphon.platform.phonology import (
    ARPABET_INVENTORY,
    SIL,
    Dimension,
    class_index,
    default_phoneme_map,
)
from artiphon.platform.storage_layer import Interval, Transcript


def _random_transcript(rng, max_intervals=50, horizon_ms=4000):
    """Sorted, non-overlapping intervals on a millisecond grid, gaps allowed."""
    n = int(rng.integers(0, max_intervals + 1))
    cuts = np.sort(rng.choice(np.arange(1, horizon_ms), size=2 * n, replace=False))
    intervals = []
    for start, end in cuts.reshape(-1, 2).tolist():
        phoneme = ARPABET_INVENTORY[int(rng.integers(len(ARPABET_INVENTORY)))]
        intervals.append(Interval(start=start / 1000, end=end / 1000, phoneme=phoneme))
    return Transcript(intervals=intervals)


def _brute_force_phonemes(transcript, midpoints):
    out = []
    for m in midpoints:
        hits = [i.phoneme for i in transcript.intervals if i.start <= m < i.end]
        out.append(hits[0] if hits else SIL)
    return out


class TestFrameTiming:
    """Tests for frame start times and window lengths."""

    def test_frame_times(self):
        """Test t_k = k/fps."""
        np.testing.assert_allclose(frame_times(3, 15), [0.0, 1 / 15, 2 / 15])

    def test_rational_rate(self):
        """Test an NTSC-style rate is exact."""
        times = frame_times(1001, Fraction(30000, 1001))

        assert times[1000] == pytest.approx(1000 * 1001 / 30000)

    def test_midpoints(self):
        """Test midpoints sit half a period after the start."""
        np.testing.assert_allclose(frame_midpoints(frame_times(2, 10), 10), [0.05, 0.15])

    @pytest.mark.parametrize(
        "sample_rate, fps, expected",
        [(16000, 15, 1067), (16000, 25, 640), (16000, Fraction(1159, 50), 690)],
    )
    def test_window_length(self, sample_rate, fps, expected):
        """Test W = round(sample_rate/fps)."""
        assert window_length(sample_rate, fps) == expected


class TestAudioWindow:
    """Tests for centred audio windows."""

    def test_centred_window(self):
        """Test the window around t = 0.2 s."""
        window = audio_window(0.2, 16000, 1067)

        assert (window.lo, window.hi) == (2667, 3734)
        assert window.length == 1067

    def test_left_padding(self):
        """Test a window at t = 0 is padded on the left."""
        window = audio_window(0.0, 16000, 1067, n_samples=32000)

        assert window.lo == -533
        assert window.pad_left == 533
        assert window.pad_right == 0

    def test_right_padding(self):
        """Test a window past the clip end is padded on the right."""
        window = audio_window(1.0, 16000, 1067, n_samples=16100)

        assert window.hi == 16534
        assert window.pad_right == 434

    def test_invalid_length(self):
        """Test W must be positive."""
        with pytest.raises(ValueError):
            audio_window(0.0, 16000, 0)

    def test_windows_always_have_length_w(self):
        """Test every extracted window has W samples, first and last frames included."""
        rng = np.random.default_rng(7)
        rates = [15, 25, 30, Fraction(30000, 1001), Fraction(1159, 50)]

        for _ in range(500):
            sample_rate = int(rng.choice([8000, 16000, 22050, 44100]))
            fps = rates[int(rng.integers(len(rates)))]
            W = window_length(sample_rate, fps)
            n_frames = int(rng.integers(1, 200))
            duration = n_frames * sample_rate / float(fps)
            n_samples = max(1, int(duration) + int(rng.integers(-W, W + 1)))
            samples = rng.integers(-3000, 3000, n_samples).astype(np.int16)
            times = frame_times(n_frames, fps)

            for k in {0, n_frames - 1, int(rng.integers(n_frames))}:
                window = audio_window(times[k], sample_rate, W, n_samples)
                out = extract_window(samples, window)

                assert window.length == len(out) == W
                expected = [samples[j] if 0 <= j < n_samples else 0 for j in range(window.lo, window.hi)]
                assert out.tolist() == expected

    def test_extract_zero_fills(self):
        """Test samples outside the clip are zeros."""
        samples = np.arange(1, 11, dtype=np.int16)

        out = extract_window(samples, audio_window(0.0, 10, 5, n_samples=10))

        assert out.tolist() == [0, 0, 1, 2, 3]
        assert out.dtype == np.int16


class TestLabelFrames:
    """Tests for midpoint labelling."""

    def test_interval_covers_midpoint(self):
        """Test a stop covering the third frame's midpoint."""
        transcript = Transcript(intervals=[Interval(start=0.10, end=0.18, phoneme="P")])

        labels = label_frames(transcript, frame_times(4, 15), Dimension.MANNER, default_phoneme_map(), fps=15)

        assert labels.phonemes[2] == "P"
        assert labels.labels[2] == class_index(Dimension.MANNER, "Stop")
        assert labels.labels[0] == class_index(Dimension.MANNER, "Silence")
        assert labels.labels[3] == class_index(Dimension.MANNER, "Silence")

    def test_empty_transcript(self):
        """Test a transcript with no intervals labels every frame Silence."""
        labels = label_frames(
            Transcript(intervals=[]), frame_times(5, 15), Dimension.VOICING, default_phoneme_map(), fps=15
        )

        assert labels.labels.tolist() == [0] * 5
        assert not labels.masked.any()

    def test_half_open_boundary(self):
        """Test a midpoint on a boundary belongs to the later interval."""
        transcript = Transcript(
            intervals=[
                Interval(start=0.0, end=0.05, phoneme="P"),
                Interval(start=0.05, end=0.2, phoneme="M"),
            ]
        )

        labels = label_frames(transcript, frame_times(1, 10), Dimension.MANNER, default_phoneme_map(), fps=10)

        assert labels.phonemes == ["M"]
        assert labels.labels[0] == class_index(Dimension.MANNER, "Nasal")

    def test_place_masks_vowels(self):
        """Test vowel frames are masked in the place task only."""
        transcript = Transcript(
            intervals=[
                Interval(start=0.0, end=0.1, phoneme="AA"),
                Interval(start=0.1, end=0.2, phoneme="T"),
            ]
        )
        times = frame_times(3, 10)
        phoneme_map = default_phoneme_map()

        place = label_frames(transcript, times, Dimension.PLACE, phoneme_map, fps=10)
        manner = label_frames(transcript, times, Dimension.MANNER, phoneme_map, fps=10)

        assert place.masked.tolist() == [True, False, False]
        assert place.labels[1] == class_index(Dimension.PLACE, "Alveolar")
        assert place.labels[2] == class_index(Dimension.PLACE, "Silence")
        assert not manner.masked.any()
        assert manner.labels[0] == class_index(Dimension.MANNER, "Vowel")

    def test_matches_brute_force_scan(self):
        """Test labels agree with a linear scan on random transcripts and rates."""
        rng = np.random.default_rng(2024)
        phoneme_map = default_phoneme_map()
        table = phoneme_map.lookup_table(Dimension.PLACE)

        for _ in range(500):
            transcript = _random_transcript(rng)
            fps = int(rng.integers(10, 31))
            times = frame_times(int(rng.integers(1, 130)), fps)
            midpoints = frame_midpoints(times, fps)

            expected = _brute_force_phonemes(transcript, midpoints.tolist())
            labels = label_frames(transcript, times, Dimension.PLACE, phoneme_map, fps=fps)

            assert labels.phonemes == expected
            assert labels.labels.tolist() == [table[p][0] for p in expected]
            assert labels.masked.tolist() == [table[p][1] for p in expected]

    def test_shift_equivariance(self):
        """Test shifting a transcript by whole frames shifts the labels."""
        rng = np.random.default_rng(11)
        phoneme_map = default_phoneme_map()
        fps, shift = 15, 3
        # Endpoints on a 10 ms grid offset by 5 ms never meet a 15 fps midpoint.
        intervals = []
        cursor = 5
        for _ in range(20):
            length = int(rng.integers(4, 20)) * 10
            phoneme = ARPABET_INVENTORY[int(rng.integers(len(ARPABET_INVENTORY)))]
            intervals.append(Interval(start=cursor / 1000, end=(cursor + length) / 1000, phoneme=phoneme))
            cursor += length + int(rng.integers(0, 3)) * 10
        transcript = Transcript(intervals=intervals)
        n = 40

        base = label_frames(transcript, frame_times(n + shift, fps), Dimension.MANNER, phoneme_map, fps)
        moved = label_frames(
            transcript.shifted(shift / fps), frame_times(n + shift, fps), Dimension.MANNER, phoneme_map, fps
        )

        assert moved.labels[shift:].tolist() == base.labels[:n].tolist()

    def test_phonemes_at_gaps(self):
        """Test times in gaps and past the end are silence."""
        transcript = Transcript(
            intervals=[
                Interval(start=0.1, end=0.2, phoneme="S"),
                Interval(start=0.3, end=0.4, phoneme="Z"),
            ]
        )

        assert phonemes_at(transcript, [0.05, 0.15, 0.25, 0.35, 0.5]) == [SIL, "S", SIL, "Z", SIL]
