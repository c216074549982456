"""
Storage layer: corpus file formats.

Media readers and writers (WAV, RVF1/PGM video), transcripts, manifests and
ACCK checkpoints.
"""

from artiphon.platform.storage_layer.audio import AudioClip, read_audio, resample, write_audio
from artiphon.platform.storage_layer.checkpoint import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from artiphon.platform.storage_layer.manifest import (
    Gender,
    Manifest,
    Utterance,
    load_manifest,
    write_manifest,
)
from artiphon.platform.storage_layer.transcript import (
    Interval,
    Transcript,
    parse_transcript,
    parse_transcript_text,
    write_transcript,
)
from artiphon.platform.storage_layer.video import (
    VideoClip,
    format_fps,
    parse_fps,
    read_video,
    write_rvf,
)

__all__ = [
    "AudioClip",
    "read_audio",
    "resample",
    "write_audio",
    "Checkpoint",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "Gender",
    "Manifest",
    "Utterance",
    "load_manifest",
    "write_manifest",
    "Interval",
    "Transcript",
    "parse_transcript",
    "parse_transcript_text",
    "write_transcript",
    "VideoClip",
    "format_fps",
    "parse_fps",
    "read_video",
    "write_rvf",
]
