"""
Training: speaker-independent folds, AdamW and the training loop.
"""

from artiphon.features.training.folds import Fold, FoldPlan, FoldPolicy, Split, make_folds
from artiphon.features.training.optimizer import AdamW, adamw_step
from artiphon.features.training.trainer import (
    BEST_CHECKPOINT,
    EPOCHS_FILE,
    FINAL_CHECKPOINT,
    HISTORY_FILE,
    EpochRecord,
    StepRecord,
    TrainConfig,
    TrainResult,
    configs_digest,
    read_history,
    train,
)

__all__ = [
    "Fold",
    "FoldPlan",
    "FoldPolicy",
    "Split",
    "make_folds",
    "AdamW",
    "adamw_step",
    "BEST_CHECKPOINT",
    "EPOCHS_FILE",
    "FINAL_CHECKPOINT",
    "HISTORY_FILE",
    "EpochRecord",
    "StepRecord",
    "TrainConfig",
    "TrainResult",
    "configs_digest",
    "read_history",
    "train",
]
