"""
Classification mode configuration.
"""

import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from artiphon.platform.phonology import Dimension


class Mode(str, enum.Enum):
    """Encoder/modality configurations."""

    UNIV = "univ"  # video only: ViT [CLS] → head
    UNIA = "unia"  # audio only: speech encoder → attention pool → head
    FUSION = "fusion"  # [CLS] ⊕ pooled audio → head
    CONTRAST = "contrast"  # video classifier with cross-modal cosine alignment


class Negatives(str, enum.Enum):
    NONE = "none"
    IN_BATCH_MARGIN = "in_batch_margin"


class ModeConfig(BaseModel):
    """
    Mode, task and contrastive-branch settings.

    Attributes:
        contrastive_weight: λ in L = L_cls + λ·L_cos
        temporal_length: T, time steps both modalities are projected to
        projection_dim: D, feature width of the projections
        negatives: Extra in-batch hinge on mismatched pairs, off by default
        margin: Hinge margin for in-batch negatives
    """

    model_config = ConfigDict(extra="forbid")

    mode: Mode = Mode.CONTRAST
    dimension: Optional[Dimension] = None
    contrastive_weight: float = Field(default=0.1, ge=0.0)
    temporal_length: int = Field(default=8, ge=1)
    projection_dim: int = Field(default=64, ge=1)
    negatives: Negatives = Negatives.NONE
    margin: float = Field(default=0.0, ge=-1.0, le=1.0)

    @property
    def uses_audio_encoder(self) -> bool:
        return self.mode != Mode.UNIV

    @property
    def needs_audio_for_training(self) -> bool:
        """Whether training reads audio; contrast with λ = 0 never does."""
        if self.mode == Mode.CONTRAST:
            return self.contrastive_weight > 0
        return self.mode in (Mode.UNIA, Mode.FUSION)

    @property
    def needs_audio_for_inference(self) -> bool:
        return self.mode in (Mode.UNIA, Mode.FUSION)
