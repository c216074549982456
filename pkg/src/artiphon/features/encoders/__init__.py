"""
Encoders: vision transformer, raw-waveform speech encoder and attention pooling.
"""

from artiphon.features.encoders.audio import AudioConfig, AudioEncoder, ConvLayer, normalize_windows
from artiphon.features.encoders.pooling import AttentionPool
from artiphon.features.encoders.vit import (
    PositionalEncoding,
    VisionTransformer,
    VitConfig,
    patchify,
    prepare_frames,
    unpatchify,
)

__all__ = [
    "AudioConfig",
    "AudioEncoder",
    "ConvLayer",
    "normalize_windows",
    "AttentionPool",
    "PositionalEncoding",
    "VisionTransformer",
    "VitConfig",
    "patchify",
    "prepare_frames",
    "unpatchify",
]
