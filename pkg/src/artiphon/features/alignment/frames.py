"""
Frame timing, audio windows and frame-level labels.

Conventions:
- frame k starts at t_k = k/fps;
- frame k is labelled by the interval containing its midpoint
  t_k + 1/(2·fps), intervals being half-open [start, end);
- the audio window of frame k is centred on t_k and is W samples long,
  zero-padded past either end of the clip.
"""

import math
from fractions import Fraction
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from artiphon.platform.phonology import SIL, Dimension, PhonemeMap
from artiphon.platform.storage_layer import Transcript

Rate = Union[Fraction, int, float, str]


def as_rate(value: Rate) -> Fraction:
    """Exact rational rate; floats go through their decimal repr (23.18 → 1159/50)."""
    return value if isinstance(value, Fraction) else Fraction(str(value))


class AudioWindow(BaseModel):
    """Sample range [lo, hi) of one frame's window and its edge padding."""

    model_config = ConfigDict(frozen=True)

    lo: int
    hi: int
    pad_left: int = 0
    pad_right: int = 0

    @property
    def length(self) -> int:
        return self.hi - self.lo


class FrameLabels(BaseModel):
    """Per-frame class index and mask for one dimension."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    labels: np.ndarray
    masked: np.ndarray
    phonemes: List[str]


def frame_times(n_frames: int, fps: Rate) -> List[float]:
    """
    Start time of every frame, t_k = k/fps.

    Example:
        >>> [round(t, 4) for t in frame_times(3, 15)]
        [0.0, 0.0667, 0.1333]
    """
    fps = as_rate(fps)
    return [float(Fraction(k) / fps) for k in range(n_frames)]


def frame_midpoints(frame_times: Sequence[float], fps: Rate) -> np.ndarray:
    """Label sampling times t_k + 1/(2·fps)."""
    return np.asarray(frame_times, dtype=np.float64) + float(1 / (2 * as_rate(fps)))


def window_length(sample_rate: int, fps: Rate) -> int:
    """
    Samples per frame period, rounded half up: 16000/15 → 1067.
    """
    return math.floor(Fraction(sample_rate) / as_rate(fps) + Fraction(1, 2))


def audio_window(t: float, sample_rate: int, W: int, n_samples: Optional[int] = None) -> AudioWindow:
    """
    Window of W samples centred on time ``t``.

    c = round(t·sample_rate) (half up), lo = c − floor(W/2), hi = lo + W.

    Example:
        >>> audio_window(0.2, 16000, 1067)
        AudioWindow(lo=2667, hi=3734, pad_left=0, pad_right=0)
    """
    if W < 1:
        raise ValueError("window length must be at least 1")
    center = math.floor(Fraction(t) * sample_rate + Fraction(1, 2))
    lo = center - W // 2
    hi = lo + W
    pad_left = max(0, -lo)
    pad_right = max(0, hi - n_samples) if n_samples is not None else 0
    return AudioWindow(lo=lo, hi=hi, pad_left=pad_left, pad_right=pad_right)


def extract_window(samples: np.ndarray, window: AudioWindow) -> np.ndarray:
    """Slice a window out of ``samples``, zero-filling outside the clip."""
    out = np.zeros(window.length, dtype=samples.dtype)
    lo, hi = max(window.lo, 0), min(window.hi, samples.shape[0])
    if hi > lo:
        out[lo - window.lo : hi - window.lo] = samples[lo:hi]
    return out


def phonemes_at(transcript: Transcript, times: Sequence[float]) -> List[str]:
    """Phoneme of the interval containing each time; SIL in gaps."""
    times = np.asarray(times, dtype=np.float64)
    if not transcript.intervals:
        return [SIL] * times.shape[0]
    starts = np.array([i.start for i in transcript.intervals])
    ends = np.array([i.end for i in transcript.intervals])
    index = np.searchsorted(starts, times, side="right") - 1
    inside = (index >= 0) & (times < ends[np.clip(index, 0, None)])
    return [
        transcript.intervals[i].phoneme if ok else SIL for i, ok in zip(index.tolist(), inside.tolist())
    ]


def _classify(phonemes: List[str], dim: Dimension, phoneme_map: PhonemeMap) -> FrameLabels:
    table = phoneme_map.lookup_table(dim)
    labels = np.array([table[p][0] for p in phonemes], dtype=np.int64)
    masked = np.array([table[p][1] for p in phonemes], dtype=bool)
    return FrameLabels(labels=labels, masked=masked, phonemes=phonemes)


def label_frames(
    transcript: Transcript,
    frame_times: Sequence[float],
    dim: Dimension,
    phoneme_map: PhonemeMap,
    fps: Rate,
) -> FrameLabels:
    """
    Label each frame by the interval containing its midpoint.

    Args:
        transcript: Validated intervals
        frame_times: Frame start times t_k
        dim: Dimension to label
        phoneme_map: Phoneme → class mapping
        fps: Frame rate, for the half-period offset

    Returns:
        FrameLabels; ``masked`` is set for frames whose phoneme is excluded
        from the dimension (e.g. vowels in the place task)
    """
    return _classify(phonemes_at(transcript, frame_midpoints(frame_times, fps)), dim, phoneme_map)

