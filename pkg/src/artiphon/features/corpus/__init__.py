"""
Corpus: synthetic corpus generation and class statistics.
"""

from artiphon.features.corpus.stats import ClassCount, ClassHistogram, class_histogram, histogram_from_counts
from artiphon.features.corpus.synth import (
    SpeakerAnatomy,
    SynthSpec,
    render_frame,
    sample_transcript,
    synthesize_corpus,
    synthesize_phone,
)

__all__ = [
    "ClassCount",
    "ClassHistogram",
    "class_histogram",
    "histogram_from_counts",
    "SpeakerAnatomy",
    "SynthSpec",
    "render_frame",
    "sample_transcript",
    "synthesize_corpus",
    "synthesize_phone",
]
