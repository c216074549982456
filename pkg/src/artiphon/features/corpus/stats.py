"""
Per-class frame counts of a corpus.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from artiphon.features.alignment.examples import AlignmentConfig
from artiphon.features.alignment.frames import frame_times, label_frames
from artiphon.platform.phonology import Dimension, PhonemeMap, class_names, default_phoneme_map, n_classes
from artiphon.platform.storage_layer import Manifest, parse_transcript, read_video


class ClassCount(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    frames: int
    percentage: float


class ClassHistogram(BaseModel):
    """
    Frame counts per class of one dimension.

    ``percentage`` is relative to the unmasked frames; masked frames (place
    of vowels) are reported separately, so ``total + masked`` is the corpus
    frame count.
    """

    model_config = ConfigDict(frozen=True)

    dimension: Dimension
    classes: List[ClassCount]
    masked: int

    @property
    def total(self) -> int:
        return sum(c.frames for c in self.classes)

    @property
    def counts(self) -> np.ndarray:
        return np.array([c.frames for c in self.classes], dtype=np.int64)

    def frequencies(self) -> np.ndarray:
        """Class frequencies over unmasked frames (zeros for an empty corpus)."""
        total = self.total
        return self.counts / total if total else np.zeros(len(self.classes))


def histogram_from_counts(dim: Dimension, counts: np.ndarray, masked: int = 0) -> ClassHistogram:
    total = int(counts.sum())
    return ClassHistogram(
        dimension=Dimension(dim),
        classes=[
            ClassCount(
                name=name,
                frames=int(count),
                percentage=100.0 * int(count) / total if total else 0.0,
            )
            for name, count in zip(class_names(dim), counts.tolist())
        ],
        masked=masked,
    )


def class_histogram(
    manifest: Manifest,
    dim: Dimension,
    config: Optional[AlignmentConfig] = None,
    phoneme_map: Optional[PhonemeMap] = None,
) -> ClassHistogram:
    """
    Count frames per class at the configured frame rate.

    Only video and transcripts are read; labels follow the same midpoint
    rule as example building.

    Example:
        >>> hist = class_histogram(manifest, Dimension.VOICING)
        >>> hist.total + hist.masked == total_frames
        True
    """
    config = config or AlignmentConfig()
    phoneme_map = phoneme_map or default_phoneme_map()
    counts = np.zeros(n_classes(dim), dtype=np.int64)
    masked = 0
    for utterance in manifest.utterances:
        video = read_video(utterance.video_path, target_fps=config.fps, fps=utterance.fps)
        transcript = parse_transcript(utterance.transcript_path, phoneme_map=phoneme_map)
        times = frame_times(video.n_frames, config.fps)
        labels = label_frames(transcript, times, dim, phoneme_map, fps=config.fps)
        counts += np.bincount(labels.labels[~labels.masked], minlength=counts.shape[0])
        masked += int(labels.masked.sum())
    return histogram_from_counts(dim, counts, masked)
