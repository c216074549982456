"""
Alignment: frame timing, per-frame audio windows and frame labels.
"""

from artiphon.features.alignment.cache import ExampleCache, decode_example_set, encode_example_set
from artiphon.features.alignment.examples import (
    AlignmentConfig,
    ExampleSet,
    FrameExample,
    build_example_set,
    build_examples,
)
from artiphon.features.alignment.frames import (
    AudioWindow,
    FrameLabels,
    as_rate,
    audio_window,
    extract_window,
    frame_midpoints,
    frame_times,
    label_frames,
    phonemes_at,
    window_length,
)

__all__ = [
    "ExampleCache",
    "decode_example_set",
    "encode_example_set",
    "AlignmentConfig",
    "ExampleSet",
    "FrameExample",
    "build_example_set",
    "build_examples",
    "AudioWindow",
    "FrameLabels",
    "as_rate",
    "audio_window",
    "extract_window",
    "frame_midpoints",
    "frame_times",
    "label_frames",
    "phonemes_at",
    "window_length",
]
