"""
Raw-waveform speech encoder.

A stack of strided 1-D convolutions (each followed by layer norm and GELU)
turns a W-sample window into T_a latent frames, which a linear projection
and a small transformer context network map to [T_a, D_a]. The encoder is
randomly initialised and frozen by default; weights can be imported from
any ACCK checkpoint that stores ``audio_encoder.*`` parameters.
"""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.platform.storage_layer.audio import PCM16_SCALE
from artiphon.platform.tensor import Tensor, ops
from artiphon.platform.tensor.nn import (
    Conv1d,
    LayerNorm,
    Linear,
    Module,
    TransformerBlock,
    sinusoidal_positions,
)


class ConvLayer(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    channels: int = Field(ge=1)
    kernel: int = Field(ge=1)
    stride: int = Field(ge=1)


class AudioConfig(BaseModel):
    """
    Speech encoder hyperparameters (desk-scale defaults).

    The default conv stack turns a 1067-sample window into 52 frames.
    """

    model_config = ConfigDict(extra="forbid")

    conv_layers: List[ConvLayer] = Field(
        default_factory=lambda: [
            ConvLayer(channels=32, kernel=10, stride=5),
            ConvLayer(channels=32, kernel=8, stride=4),
        ],
        min_length=1,
    )
    depth: int = Field(default=2, ge=0)
    heads: int = Field(default=4, ge=1)
    hidden_dim: int = Field(default=64, ge=1)
    mlp_dim: int = Field(default=128, ge=1)
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    frozen: bool = True

    @model_validator(mode="after")
    def validate_heads(self) -> "AudioConfig":
        if self.hidden_dim % self.heads:
            raise ValueError(f"hidden_dim {self.hidden_dim} is not divisible by heads {self.heads}")
        return self

    def output_length(self, window: int) -> int:
        """
        Latent frames T_a produced from ``window`` samples.

        Raises:
            ShapeMismatchError: The window is too short for the conv stack
        """
        length = window
        for layer in self.conv_layers:
            if length < layer.kernel:
                raise ShapeMismatchError(
                    f"window of {window} samples is too short for the conv stack"
                )
            length = ops.conv_output_length(length, layer.kernel, layer.stride)
        return length


def normalize_windows(windows: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """int16 windows [B, W] → per-window zero-mean unit-variance float."""
    x = np.asarray(windows, dtype=np.float64) / PCM16_SCALE
    x = x - x.mean(axis=-1, keepdims=True)
    return x / np.sqrt(x.var(axis=-1, keepdims=True) + eps)


class AudioEncoder(Module):
    """Windows [B, W] → latent sequences [B, T_a, D_a]."""

    def __init__(self, config: AudioConfig, rng: np.random.Generator):
        self.config = config
        convs: List[Tuple[Conv1d, LayerNorm]] = []
        in_channels = 1
        for layer in config.conv_layers:
            convs.append((Conv1d(in_channels, layer.channels, layer.kernel, layer.stride, rng), LayerNorm(layer.channels)))
            in_channels = layer.channels
        self.convs = [conv for conv, _ in convs]
        self.conv_norms = [norm for _, norm in convs]
        self.feature_proj = Linear(in_channels, config.hidden_dim, rng)
        self.blocks = [
            TransformerBlock(config.hidden_dim, config.heads, config.mlp_dim, rng, config.dropout)
            for _ in range(config.depth)
        ]
        self.norm = LayerNorm(config.hidden_dim)
        if config.frozen:
            self.freeze()

    def forward(self, windows: np.ndarray) -> Tensor:
        windows = np.asarray(windows)
        if windows.ndim != 2:
            raise ShapeMismatchError(f"expected windows [B, W], got {windows.shape}")
        length = self.config.output_length(windows.shape[1])

        x = Tensor(normalize_windows(windows)[:, None, :])  # [B, 1, W]
        for i, (conv, norm) in enumerate(zip(self.convs, self.conv_norms)):
            x = ops.gelu(norm(conv(x)))  # [B, L, C]
            if i < len(self.convs) - 1:
                x = ops.swapaxes(x, 1, 2)
        x = self.feature_proj(x)
        x = x + sinusoidal_positions(length, self.config.hidden_dim)[None]
        for block in self.blocks:
            x = block(x)
        return self.norm(x)

    def encode(self, window: np.ndarray) -> Tensor:
        """One window [W] → [T_a, D_a]."""
        return self(np.asarray(window)[None])[0]
