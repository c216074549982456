"""
Vision transformer over grayscale frames.

Frames are cut into non-overlapping P×P patches (row-major), each patch is
linearly embedded, a learned [CLS] token is prepended and position
encodings are added before a stack of pre-norm transformer blocks.
"""

import enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from artiphon.core.exceptions import ShapeMismatchError
from artiphon.platform.tensor import Parameter, Tensor, ops
from artiphon.platform.tensor.nn import (
    Dropout,
    LayerNorm,
    Linear,
    Module,
    TransformerBlock,
    sinusoidal_positions,
    trunc_normal,
)


class PositionalEncoding(str, enum.Enum):
    LEARNED = "learned"
    SINUSOIDAL = "sinusoidal"


class VitConfig(BaseModel):
    """
    ViT hyperparameters (desk-scale defaults).

    A 224-pixel, 768-wide, 12-layer, 12-head, 3072-MLP configuration is the
    full-size equivalent.
    """

    model_config = ConfigDict(extra="forbid")

    image_size: int = Field(default=64, ge=1)
    patch_size: int = Field(default=16, ge=1)
    channels: int = Field(default=1, ge=1, description="1, or 3 to replicate grayscale")
    embed_dim: int = Field(default=64, ge=1)
    depth: int = Field(default=2, ge=0)
    heads: int = Field(default=4, ge=1)
    mlp_dim: int = Field(default=128, ge=1)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    positional: PositionalEncoding = PositionalEncoding.LEARNED

    @model_validator(mode="after")
    def validate_geometry(self) -> "VitConfig":
        if self.image_size % self.patch_size:
            raise ValueError(f"image_size {self.image_size} is not divisible by patch_size {self.patch_size}")
        if self.embed_dim % self.heads:
            raise ValueError(f"embed_dim {self.embed_dim} is not divisible by heads {self.heads}")
        return self

    @property
    def n_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @property
    def patch_dim(self) -> int:
        return self.channels * self.patch_size**2


def patchify(images: np.ndarray, patch_size: int) -> np.ndarray:
    """
    Split [..., C, H, W] images into [..., N, C·P²] patch rows.

    Patches are ordered row-major over the image; each row holds one patch
    channel by channel.

    Example:
        >>> patchify(np.zeros((1, 224, 224)), 16).shape
        (196, 256)

    Raises:
        ShapeMismatchError: H or W not divisible by P
    """
    *lead, c, h, w = images.shape
    p = patch_size
    if h % p or w % p:
        raise ShapeMismatchError(f"patchify: {h}x{w} image is not divisible into {p}x{p} patches")
    gh, gw = h // p, w // p
    x = images.reshape(*lead, c, gh, p, gw, p)
    n = len(lead)
    x = np.transpose(x, tuple(range(n)) + (n + 1, n + 3, n, n + 2, n + 4))
    return x.reshape(*lead, gh * gw, c * p * p)


def unpatchify(tokens: np.ndarray, channels: int, height: int, width: int, patch_size: int) -> np.ndarray:
    """Inverse of ``patchify``."""
    *lead, n_tokens, dim = tokens.shape
    p = patch_size
    gh, gw = height // p, width // p
    if n_tokens != gh * gw or dim != channels * p * p:
        raise ShapeMismatchError(f"unpatchify: {tokens.shape} does not tile {channels}x{height}x{width}")
    n = len(lead)
    x = tokens.reshape(*lead, gh, gw, channels, p, p)
    x = np.transpose(x, tuple(range(n)) + (n + 2, n, n + 3, n + 1, n + 4))
    return x.reshape(*lead, channels, height, width)


def prepare_frames(frames: np.ndarray, config: VitConfig) -> np.ndarray:
    """
    uint8 frames [B, H, W] or [B, C, H, W] → float [B, C, H, W] in [-1, 1].

    Single-channel input is replicated when the config asks for 3 channels.
    """
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim == 3:
        x = x[:, None]
    if x.ndim != 4:
        raise ShapeMismatchError(f"expected frames [B, H, W] or [B, C, H, W], got {frames.shape}")
    if x.shape[1] == 1 and config.channels > 1:
        x = np.repeat(x, config.channels, axis=1)
    if x.shape[1:] != (config.channels, config.image_size, config.image_size):
        raise ShapeMismatchError(
            f"frames {x.shape[1:]} do not match the ViT input "
            f"({config.channels}, {config.image_size}, {config.image_size})"
        )
    return (x / 255.0 - 0.5) / 0.5


class VisionTransformer(Module):
    """Frames → token states [B, N+1, D_v]; row 0 is the [CLS] state."""

    def __init__(self, config: VitConfig, rng: np.random.Generator):
        self.config = config
        n_tokens = config.n_patches + 1
        self.patch_embed = Linear(config.patch_dim, config.embed_dim, rng)
        self.cls_token = Parameter(trunc_normal(rng, (1, 1, config.embed_dim)))
        self.pos_embed: Optional[Parameter] = None
        self._fixed_positions: Optional[Tensor] = None
        if config.positional == PositionalEncoding.LEARNED:
            self.pos_embed = Parameter(trunc_normal(rng, (1, n_tokens, config.embed_dim)))
        else:
            self._fixed_positions = Tensor(sinusoidal_positions(n_tokens, config.embed_dim)[None])
        self.pos_drop = Dropout(config.dropout)
        self.blocks = [
            TransformerBlock(config.embed_dim, config.heads, config.mlp_dim, rng, config.dropout)
            for _ in range(config.depth)
        ]
        self.norm = LayerNorm(config.embed_dim)

    def forward(self, frames: np.ndarray) -> Tensor:
        x = prepare_frames(frames, self.config)
        tokens = self.patch_embed(Tensor(patchify(x, self.config.patch_size)))
        batch = tokens.shape[0]
        cls = self.cls_token + np.zeros((batch, 1, self.config.embed_dim))
        x = ops.concat([cls, tokens], axis=1)
        x = x + (self.pos_embed if self.pos_embed is not None else self._fixed_positions)
        x = self.pos_drop(x)
        for block in self.blocks:
            x = block(x)
        return self.norm(x)

    def encode(self, frame: np.ndarray) -> Tensor:
        """One frame [H, W] or [C, H, W] → [N+1, D_v]."""
        return self(np.asarray(frame)[None])[0]
