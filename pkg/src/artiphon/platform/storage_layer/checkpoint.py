"""
ACCK checkpoint files.

Layout (little-endian)::

    b"ACCK"
    u32     version
    32 B    SHA-256 of the run config (raw digest)
    u32     metadata length, then that many bytes of UTF-8 JSON (sorted keys)
    u32     parameter count
    per parameter:
        u16 name length, UTF-8 name
        u8  ndim, ndim x u32 dims
        prod(dims) x f64 values, row-major

Parameters are written in the order given, so identical models produce
identical bytes.
"""

import io
import json
import os
import struct
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from artiphon.core.exceptions import CheckpointError, CorpusIOError
from artiphon.core.logging import get_logger

logger = get_logger(__name__)

ACCK_MAGIC = b"ACCK"
ACCK_VERSION = 1


class Checkpoint(BaseModel):
    """Named parameter arrays plus the run metadata needed to rebuild a model."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config_hash: str = Field(pattern=r"^[0-9a-f]{64}$")
    metadata: Dict[str, Any] = Field(default_factory=dict)
    params: Dict[str, np.ndarray] = Field(default_factory=dict)

    def subset(self, prefix: str) -> Dict[str, np.ndarray]:
        """Parameters whose names start with ``prefix``."""
        return {k: v for k, v in self.params.items() if k.startswith(prefix)}


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    buf = io.BytesIO()
    buf.write(ACCK_MAGIC)
    buf.write(struct.pack("<I", ACCK_VERSION))
    buf.write(bytes.fromhex(checkpoint.config_hash))

    meta = json.dumps(checkpoint.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)

    buf.write(struct.pack("<I", len(checkpoint.params)))
    for name, value in checkpoint.params.items():
        encoded = name.encode("utf-8")
        array = np.ascontiguousarray(value, dtype="<f8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", array.ndim))
        buf.write(struct.pack(f"<{array.ndim}I", *array.shape))
        buf.write(array.tobytes())
    return buf.getvalue()


class _Reader:
    def __init__(self, blob: bytes, source: str):
        self.blob = blob
        self.offset = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.blob):
            raise CheckpointError(f"{self.source} is truncated", details={"offset": self.offset})
        chunk = self.blob[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Checkpoint:
    """
    Parse ACCK bytes.

    Raises:
        CheckpointError: Bad magic, unknown version, truncation or trailing bytes
    """
    reader = _Reader(blob, source)
    if reader.take(4) != ACCK_MAGIC:
        raise CheckpointError(f"{source} is not an ACCK checkpoint")
    (version,) = reader.unpack("<I")
    if version != ACCK_VERSION:
        raise CheckpointError(f"{source} has unsupported version {version}", details={"version": version})
    config_hash = reader.take(32).hex()

    (meta_len,) = reader.unpack("<I")
    try:
        metadata = json.loads(reader.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source} has corrupt metadata", details={"error": str(e)}) from e

    params: Dict[str, np.ndarray] = {}
    (count,) = reader.unpack("<I")
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I")
        size = int(np.prod(shape)) if ndim else 1
        params[name] = np.frombuffer(reader.take(size * 8), dtype="<f8").reshape(shape).astype(np.float64)

    if reader.offset != len(blob):
        raise CheckpointError(f"{source} has {len(blob) - reader.offset} trailing bytes")
    return Checkpoint(config_hash=config_hash, metadata=metadata, params=params)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    """Write a checkpoint atomically (temp file then rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(encode_checkpoint(checkpoint))
        os.replace(tmp, path)
    except OSError as e:
        raise CorpusIOError(f"Cannot write checkpoint {path}", details={"error": str(e)}) from e

    logger.info("checkpoint_saved", path=str(path), params=len(checkpoint.params))
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read and decode a checkpoint file."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CorpusIOError(f"Cannot read checkpoint {path}", details={"error": str(e)}) from e

    checkpoint = decode_checkpoint(blob, source=str(path))
    logger.info("checkpoint_loaded", path=str(path), params=len(checkpoint.params))
    return checkpoint

