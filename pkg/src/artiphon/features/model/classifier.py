"""
Frame classifier in four modes.

- univ: logits = head(ViT(frame)[CLS])
- unia: logits = head(pool(speech_encoder(window)))
- fusion: logits = head(ViT(frame)[CLS] ⊕ pool(speech_encoder(window)))
- contrast: logits = head(mean_T(project(ViT(frame)[patches]))); during
  training the projected image tokens are also aligned with the projected
  speech latents. Inference reads the frame only.
"""

from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from artiphon.core.exceptions import CheckpointError, ConfigurationError, WrongModeError
from artiphon.core.logging import get_logger
from artiphon.features.encoders import AttentionPool, AudioConfig, AudioEncoder, VisionTransformer, VitConfig
from artiphon.features.model.class_weights import ClassWeights
from artiphon.features.model.config import Mode, ModeConfig
from artiphon.features.model.projection import Projection
from artiphon.platform.phonology import n_classes
from artiphon.platform.storage_layer import Checkpoint
from artiphon.platform.tensor import Tensor, no_grad, ops
from artiphon.platform.tensor.nn import Linear, Module

logger = get_logger(__name__)

AUDIO_ENCODER_PREFIX = "audio_encoder."


class ModelOutput(BaseModel):
    """Logits plus the contrastive projections (contrast mode, audio given)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    logits: Tensor
    img: Optional[Tensor] = None
    aud: Optional[Tensor] = None


class ClassifierModel(Module):
    """
    Encoders, heads and class weights for one mode.

    Sub-modules a mode does not use are not built, so parameter lists and
    checkpoints only hold what the mode trains.

    Args:
        mode_config: Mode and task; ``dimension`` must be set
        vit_config: Image encoder settings
        audio_config: Speech encoder settings
        window_length: Audio window W in samples
        rng: Initialisation stream
        class_frequencies: Training class frequencies for the weight prior
    """

    def __init__(
        self,
        mode_config: ModeConfig,
        vit_config: VitConfig,
        audio_config: AudioConfig,
        window_length: int,
        rng: np.random.Generator,
        class_frequencies: Optional[np.ndarray] = None,
    ):
        if mode_config.dimension is None:
            raise ConfigurationError("A classification dimension is required to build a model")
        self.mode_config = mode_config
        self.vit_config = vit_config
        self.audio_config = audio_config
        self.window_length = window_length
        self.n_classes = n_classes(mode_config.dimension)
        mode = mode_config.mode

        self.vit: Optional[VisionTransformer] = None
        self.audio_encoder: Optional[AudioEncoder] = None
        self.audio_pool: Optional[AttentionPool] = None
        self.image_proj: Optional[Projection] = None
        self.audio_proj: Optional[Projection] = None

        if mode != Mode.UNIA:
            self.vit = VisionTransformer(vit_config, rng)
        if mode != Mode.UNIV:
            self.audio_encoder = AudioEncoder(audio_config, rng)
        if mode in (Mode.UNIA, Mode.FUSION):
            self.audio_pool = AttentionPool(audio_config.hidden_dim, rng)
        if mode == Mode.CONTRAST:
            steps, dim = mode_config.temporal_length, mode_config.projection_dim
            self.image_proj = Projection(vit_config.n_patches, steps, vit_config.embed_dim, dim, rng)
            self.audio_proj = Projection(
                audio_config.output_length(window_length), steps, audio_config.hidden_dim, dim, rng
            )

        head_in = {
            Mode.UNIV: vit_config.embed_dim,
            Mode.UNIA: audio_config.hidden_dim,
            Mode.FUSION: vit_config.embed_dim + audio_config.hidden_dim,
            Mode.CONTRAST: mode_config.projection_dim,
        }[mode]
        self.head = Linear(head_in, self.n_classes, rng, zero_init=True)
        self.class_weights = ClassWeights(self.n_classes, class_frequencies)

        for name, param in self.named_parameters():
            param.name = name
        self.assign_dropout_keys()

    @property
    def mode(self) -> Mode:
        return self.mode_config.mode

    def _pooled_audio(self, windows: np.ndarray) -> Tensor:
        if windows is None:
            raise ConfigurationError(f"{self.mode.value} mode needs audio windows")
        return self.audio_pool(self.audio_encoder(windows))

    def forward(self, frames: Optional[np.ndarray] = None, windows: Optional[np.ndarray] = None) -> ModelOutput:
        """
        Args:
            frames: uint8 frames [B, H, W] (all modes except unia)
            windows: int16 audio windows [B, W] (unia, fusion; contrast
                training only)
        """
        mode = self.mode
        if mode == Mode.UNIV:
            return ModelOutput(logits=self.head(self.vit(frames)[:, 0, :]))
        if mode == Mode.UNIA:
            return ModelOutput(logits=self.head(self._pooled_audio(windows)))
        if mode == Mode.FUSION:
            fused = ops.concat([self.vit(frames)[:, 0, :], self._pooled_audio(windows)], axis=-1)
            return ModelOutput(logits=self.head(fused))

        tokens = self.vit(frames)
        img = self.image_proj(tokens[:, 1:, :])
        logits = self.head(ops.mean(img, axis=1))
        aud = self.audio_proj(self.audio_encoder(windows)) if windows is not None else None
        return ModelOutput(logits=logits, img=img, aud=aud)

    def class_weight_vector(self) -> Tensor:
        return self.class_weights()

    def predict_logits(self, frames: Optional[np.ndarray], windows: Optional[np.ndarray] = None) -> np.ndarray:
        """Eval-mode logits without recording; restores the training flag."""
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                if self.mode == Mode.CONTRAST:
                    return predict_contrastive(self, frames).numpy()
                return self(frames, windows).logits.numpy()
        finally:
            self.train(was_training)

    def metadata(self) -> Dict[str, Any]:
        """Everything needed to rebuild this model from a checkpoint."""
        return {
            "mode_config": self.mode_config.model_dump(mode="json"),
            "vit_config": self.vit_config.model_dump(mode="json"),
            "audio_config": self.audio_config.model_dump(mode="json"),
            "window_length": self.window_length,
            "n_classes": self.n_classes,
        }


def predict_contrastive(model: ClassifierModel, frames: np.ndarray) -> Tensor:
    """
    Video-only logits of a contrast-mode model.

    Raises:
        WrongModeError: The model was not built in contrast mode
    """
    if model.mode != Mode.CONTRAST:
        raise WrongModeError(Mode.CONTRAST.value, model.mode.value)
    return model(frames).logits


def model_from_checkpoint(checkpoint: Checkpoint) -> ClassifierModel:
    """
    Rebuild a model from checkpoint metadata and load its parameters.

    Raises:
        CheckpointError: Metadata missing or parameters do not match
    """
    meta = checkpoint.metadata
    try:
        mode_config = ModeConfig.model_validate(meta["mode_config"])
        vit_config = VitConfig.model_validate(meta["vit_config"])
        audio_config = AudioConfig.model_validate(meta["audio_config"])
        window_length = int(meta["window_length"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError("Checkpoint metadata does not describe a model", details={"error": str(exc)}) from exc

    model = ClassifierModel(mode_config, vit_config, audio_config, window_length, np.random.default_rng(0))
    model.load_state_dict(checkpoint.params, strict=True)
    return model


def import_audio_weights(model: ClassifierModel, checkpoint: Checkpoint) -> int:
    """
    Load ``audio_encoder.*`` parameters from any ACCK checkpoint.

    Frozen-ness follows the model's audio config, not the source.

    Returns:
        Number of parameters loaded

    Raises:
        CheckpointError: The model has no speech encoder, or the checkpoint
            holds no matching parameters
    """
    if model.audio_encoder is None:
        raise CheckpointError(f"{model.mode.value} models have no speech encoder")
    state = checkpoint.subset(AUDIO_ENCODER_PREFIX)
    if not state:
        raise CheckpointError("Checkpoint holds no audio_encoder parameters")
    loaded = model.load_state_dict(state, strict=False)
    logger.info("audio_weights_imported", parameters=len(loaded))
    return len(loaded)
