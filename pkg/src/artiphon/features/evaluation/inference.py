"""
Batched inference over example sets.
"""

from typing import Optional

import numpy as np

from artiphon.core.utils.decorators import timer
from artiphon.core.utils.validators import validate_number_range
from artiphon.features.alignment import ExampleSet
from artiphon.features.evaluation.metrics import MetricsSummary, summarize
from artiphon.features.model import ClassifierModel


def predict_logits(model: ClassifierModel, examples: ExampleSet, batch_size: int = 64) -> np.ndarray:
    """
    Eval-mode logits [N, C] in example order.

    Contrast-mode models read frames only; audio windows are passed solely
    to modes that classify from audio.
    """
    validate_number_range(batch_size, min_value=1, field_name="batch_size")
    use_audio = model.mode_config.needs_audio_for_inference
    n = len(examples)
    if n == 0:
        return np.zeros((0, model.n_classes))
    chunks = []
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        windows: Optional[np.ndarray] = examples.windows[start:stop] if use_audio else None
        chunks.append(model.predict_logits(examples.frames[start:stop], windows))
    return np.concatenate(chunks, axis=0)


def predict_examples(model: ClassifierModel, examples: ExampleSet, batch_size: int = 64) -> np.ndarray:
    """Predicted class index per example."""
    return predict_logits(model, examples, batch_size).argmax(axis=-1)


@timer
def evaluate_examples(model: ClassifierModel, examples: ExampleSet, batch_size: int = 64) -> MetricsSummary:
    """Predict and score; masked frames are excluded from every count."""
    preds = predict_examples(model, examples, batch_size)
    return summarize(preds, examples.labels, ~examples.masked, model.n_classes)
