"""
Per-frame training examples.

``build_examples`` turns one utterance into one FrameExample per video frame:
the frame image, the W-sample audio window centred on the frame start and
the frame's class in the requested dimension.
"""

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator

from artiphon.core.config import settings
from artiphon.core.exceptions import LengthMismatchError
from artiphon.core.logging import get_logger
from artiphon.features.alignment.frames import (
    as_rate,
    audio_window,
    extract_window,
    frame_times,
    label_frames,
    window_length,
)
from artiphon.platform.phonology import Dimension, PhonemeMap, default_phoneme_map
from artiphon.platform.storage_layer import (
    Utterance,
    format_fps,
    parse_transcript,
    read_audio,
    read_video,
)

logger = get_logger(__name__)


class AlignmentConfig(BaseModel):
    """
    Preprocessing targets for building frame examples.

    ``window`` defaults to round(sample_rate/fps); ``image_size`` None keeps
    the source resolution.
    """

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    fps: Fraction = Field(default=Fraction(15), description="Target video frame rate")
    sample_rate: int = Field(default=16000, gt=0, description="Target audio rate (Hz)")
    image_size: Optional[int] = Field(default=None, gt=0, description="Target frame side length")
    window: Optional[int] = Field(default=None, ge=1, description="Audio window length in samples")
    max_mismatch_seconds: float = Field(default=0.5, ge=0.0)
    cache_dir: Optional[Path] = Field(default=None, description="Example cache directory")

    @field_validator("fps", mode="before")
    @classmethod
    def validate_fps(cls, v: Any) -> Fraction:
        fps = as_rate(v)
        if fps <= 0:
            raise ValueError("fps must be positive")
        return fps

    @field_serializer("fps")
    def serialize_fps(self, v: Fraction) -> str:
        return format_fps(v)

    @property
    def window_length(self) -> int:
        return self.window if self.window is not None else window_length(self.sample_rate, self.fps)

    def digest(self) -> str:
        """Hash of every field that changes example content."""
        payload = self.model_dump(mode="json", exclude={"cache_dir"})
        payload["window"] = self.window_length
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


class FrameExample(BaseModel):
    """One frame with its audio window and label."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    utterance_id: str
    frame_index: int
    frame: np.ndarray
    audio_window: Optional[np.ndarray] = None
    label: int
    masked: bool = False


class ExampleSet(BaseModel):
    """Examples stacked into arrays for batching."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    utterance_ids: List[str]
    frame_indices: np.ndarray
    frames: np.ndarray
    windows: Optional[np.ndarray] = None
    labels: np.ndarray
    masked: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def has_audio(self) -> bool:
        return self.windows is not None

    @classmethod
    def from_examples(cls, examples: Sequence[FrameExample], image_shape: tuple = (0, 0)) -> "ExampleSet":
        has_audio = bool(examples) and all(e.audio_window is not None for e in examples)
        frames = (
            np.stack([e.frame for e in examples]) if examples else np.zeros((0,) + tuple(image_shape), np.uint8)
        )
        return cls(
            utterance_ids=[e.utterance_id for e in examples],
            frame_indices=np.array([e.frame_index for e in examples], dtype=np.int64),
            frames=frames,
            windows=np.stack([e.audio_window for e in examples]) if has_audio else None,
            labels=np.array([e.label for e in examples], dtype=np.int64),
            masked=np.array([e.masked for e in examples], dtype=bool),
        )

    def select(self, index: np.ndarray) -> "ExampleSet":
        """Subset (or reorder) by integer or boolean index."""
        index = np.flatnonzero(index) if np.asarray(index).dtype == bool else np.asarray(index)
        return ExampleSet(
            utterance_ids=[self.utterance_ids[i] for i in index.tolist()],
            frame_indices=self.frame_indices[index],
            frames=self.frames[index],
            windows=self.windows[index] if self.windows is not None else None,
            labels=self.labels[index],
            masked=self.masked[index],
        )

    def unmasked(self) -> "ExampleSet":
        return self.select(~self.masked)

    def class_counts(self, n_classes: int) -> np.ndarray:
        return np.bincount(self.labels[~self.masked], minlength=n_classes)


def build_examples(
    utterance: Utterance,
    dim: Dimension,
    config: Optional[AlignmentConfig] = None,
    phoneme_map: Optional[PhonemeMap] = None,
    load_audio: bool = True,
) -> List[FrameExample]:
    """
    Build one example per video frame of an utterance.

    Audio and video durations may differ by up to one frame period silently;
    up to ``max_mismatch_seconds`` the longer stream is truncated with a
    warning; beyond that the utterance is rejected.

    Args:
        utterance: Manifest record
        dim: Labelling dimension
        config: Preprocessing targets
        phoneme_map: Phoneme → class mapping (default: shipped map)
        load_audio: Read audio and cut windows; video-only models skip it

    Returns:
        Examples in frame order

    Raises:
        LengthMismatchError: Durations differ by more than the tolerance
    """
    config = config or AlignmentConfig()
    phoneme_map = phoneme_map if phoneme_map is not None else default_phoneme_map()

    video = read_video(
        utterance.video_path,
        target_fps=config.fps,
        image_size=config.image_size,
        fps=utterance.fps,
    )
    transcript = parse_transcript(utterance.transcript_path, phoneme_map=phoneme_map)
    n_frames = video.n_frames
    samples: Optional[np.ndarray] = None

    if load_audio:
        audio = read_audio(utterance.audio_path, target_rate=config.sample_rate)
        samples = audio.samples
        video_seconds = float(Fraction(n_frames) / config.fps)
        gap = abs(audio.duration - video_seconds)
        if gap > config.max_mismatch_seconds:
            raise LengthMismatchError(utterance.id, audio.duration, video_seconds)
        if gap > float(1 / config.fps):
            logger.warning(
                "length_mismatch_truncated",
                utterance=utterance.id,
                audio_seconds=round(audio.duration, 4),
                video_seconds=round(video_seconds, 4),
            )
            n_frames = min(n_frames, math.floor(Fraction(audio.n_samples, config.sample_rate) * config.fps))
            samples = samples[: math.floor(Fraction(n_frames) / config.fps * config.sample_rate)]

    times = frame_times(n_frames, config.fps)
    labels = label_frames(transcript, times, dim, phoneme_map, fps=config.fps)
    W = config.window_length

    examples = []
    for k, t in enumerate(times):
        window = None
        if samples is not None:
            window = extract_window(samples, audio_window(t, config.sample_rate, W, samples.shape[0]))
        examples.append(
            FrameExample(
                utterance_id=utterance.id,
                frame_index=k,
                frame=video.frames[k],
                audio_window=window,
                label=int(labels.labels[k]),
                masked=bool(labels.masked[k]),
            )
        )
    return examples


def build_example_set(
    utterances: Sequence[Utterance],
    dim: Dimension,
    config: Optional[AlignmentConfig] = None,
    phoneme_map: Optional[PhonemeMap] = None,
    load_audio: bool = True,
    manifest_digest: str = "",
) -> ExampleSet:
    """
    Build and stack the examples of many utterances.

    Utterances are processed by up to ``settings.threads`` workers; the
    result keeps manifest order regardless of worker count. With
    ``config.cache_dir`` set, results are cached on disk.
    """
    from artiphon.features.alignment.cache import ExampleCache

    config = config or AlignmentConfig()
    phoneme_map = phoneme_map if phoneme_map is not None else default_phoneme_map()
    cache = ExampleCache(config.cache_dir) if config.cache_dir is not None else None
    key = None
    if cache is not None:
        key = cache.key(
            manifest_digest, dim, config, [u.id for u in utterances], load_audio, phoneme_map.digest()
        )
        cached = cache.load(key)
        if cached is not None:
            return cached

    def build(utterance: Utterance) -> List[FrameExample]:
        return build_examples(utterance, dim, config, phoneme_map, load_audio)

    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        per_utterance = list(pool.map(build, utterances))

    examples = [e for group in per_utterance for e in group]
    size = config.image_size or 0
    example_set = ExampleSet.from_examples(examples, image_shape=(size, size))
    logger.info(
        "examples_built",
        dimension=Dimension(dim).value,
        utterances=len(utterances),
        examples=len(example_set),
        masked=int(example_set.masked.sum()),
        audio=load_audio,
    )

    if cache is not None and key is not None:
        cache.save(key, example_set)
    return example_set
