"""
Model: the four classification modes, class weights and training losses.
"""

from artiphon.features.model.class_weights import ClassWeights, effective_class_weights, inverse_frequency_prior
from artiphon.features.model.classifier import (
    ClassifierModel,
    ModelOutput,
    import_audio_weights,
    model_from_checkpoint,
    predict_contrastive,
)
from artiphon.features.model.config import Mode, ModeConfig, Negatives
from artiphon.features.model.losses import LossBreakdown, contrastive_loss, total_loss
from artiphon.features.model.projection import Projection

__all__ = [
    "ClassWeights",
    "effective_class_weights",
    "inverse_frequency_prior",
    "ClassifierModel",
    "ModelOutput",
    "import_audio_weights",
    "model_from_checkpoint",
    "predict_contrastive",
    "Mode",
    "ModeConfig",
    "Negatives",
    "LossBreakdown",
    "contrastive_loss",
    "total_loss",
    "Projection",
]
