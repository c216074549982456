"""
On-disk cache of built example sets.

File layout (little-endian)::

    b"ACX1"
    u32 length, UTF-8 JSON header {key, count, frame_shape, window, audio}
    per example:
        u32 length, then the record:
            u16 utterance-id length, UTF-8 utterance id
            u32 frame index, u8 label, u8 masked
            frame bytes (uint8, row-major)
            window bytes (int16), present only when the header says audio

A file is named by its key; keys hash the manifest digest, the dimension,
the alignment config, the phoneme map and the utterance selection.
"""

import hashlib
import io
import json
import os
import struct
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from artiphon.core.exceptions import CorpusIOError, FormatError
from artiphon.core.logging import get_logger
from artiphon.features.alignment.examples import AlignmentConfig, ExampleSet
from artiphon.platform.phonology import Dimension

logger = get_logger(__name__)

CACHE_MAGIC = b"ACX1"


def encode_example_set(example_set: ExampleSet, key: str = "") -> bytes:
    frame_shape = list(example_set.frames.shape[1:])
    window = int(example_set.windows.shape[1]) if example_set.windows is not None else 0
    header = json.dumps(
        {
            "key": key,
            "count": len(example_set),
            "frame_shape": frame_shape,
            "window": window,
            "audio": example_set.has_audio,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")

    buf = io.BytesIO()
    buf.write(CACHE_MAGIC)
    buf.write(struct.pack("<I", len(header)))
    buf.write(header)
    for i in range(len(example_set)):
        uid = example_set.utterance_ids[i].encode("utf-8")
        record = [
            struct.pack("<H", len(uid)),
            uid,
            struct.pack(
                "<IBB",
                int(example_set.frame_indices[i]),
                int(example_set.labels[i]),
                int(example_set.masked[i]),
            ),
            np.ascontiguousarray(example_set.frames[i], dtype=np.uint8).tobytes(),
        ]
        if example_set.windows is not None:
            record.append(np.ascontiguousarray(example_set.windows[i], dtype="<i2").tobytes())
        payload = b"".join(record)
        buf.write(struct.pack("<I", len(payload)))
        buf.write(payload)
    return buf.getvalue()


def decode_example_set(blob: bytes, source: str = "<bytes>") -> ExampleSet:
    """
    Parse a cache file.

    Raises:
        FormatError: Bad magic, truncated or inconsistent records
    """
    if blob[:4] != CACHE_MAGIC:
        raise FormatError("Not an example cache file", details={"path": source})
    try:
        (header_len,) = struct.unpack_from("<I", blob, 4)
        offset = 8 + header_len
        header = json.loads(blob[8:offset].decode("utf-8"))
        count = int(header["count"])
        frame_shape = tuple(int(d) for d in header["frame_shape"])
        window = int(header["window"])
        audio = bool(header["audio"])
    except (struct.error, ValueError, KeyError, UnicodeDecodeError) as exc:
        raise FormatError("Corrupt example cache header", details={"path": source}) from exc

    frame_bytes = int(np.prod(frame_shape)) if frame_shape else 0
    ids, indices, labels, masked, frames, windows = [], [], [], [], [], []
    for _ in range(count):
        if offset + 4 > len(blob):
            raise FormatError("Truncated example cache", details={"path": source})
        (length,) = struct.unpack_from("<I", blob, offset)
        record = blob[offset + 4 : offset + 4 + length]
        if len(record) != length:
            raise FormatError("Truncated example cache", details={"path": source})
        offset += 4 + length

        (uid_len,) = struct.unpack_from("<H", record, 0)
        pos = 2 + uid_len
        ids.append(record[2:pos].decode("utf-8"))
        frame_index, label, mask = struct.unpack_from("<IBB", record, pos)
        pos += 6
        expected = pos + frame_bytes + (2 * window if audio else 0)
        if expected != length:
            raise FormatError("Example record has the wrong size", details={"path": source})
        indices.append(frame_index)
        labels.append(label)
        masked.append(bool(mask))
        frames.append(np.frombuffer(record, dtype=np.uint8, count=frame_bytes, offset=pos).reshape(frame_shape))
        if audio:
            windows.append(np.frombuffer(record, dtype="<i2", count=window, offset=pos + frame_bytes))

    if offset != len(blob):
        raise FormatError("Trailing bytes in example cache", details={"path": source})

    return ExampleSet(
        utterance_ids=ids,
        frame_indices=np.array(indices, dtype=np.int64),
        frames=np.stack(frames) if frames else np.zeros((0,) + frame_shape, np.uint8),
        windows=np.stack(windows).astype(np.int16) if audio and windows else None,
        labels=np.array(labels, dtype=np.int64),
        masked=np.array(masked, dtype=bool),
    )


class ExampleCache:
    """Directory of ACX1 files, one per key."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    @staticmethod
    def key(
        manifest_digest: str,
        dim: Dimension,
        config: AlignmentConfig,
        utterance_ids: Sequence[str],
        audio: bool,
        map_digest: str,
    ) -> str:
        payload = {
            "manifest": manifest_digest,
            "dimension": Dimension(dim).value,
            "config": config.digest(),
            "phoneme_map": map_digest,
            "utterances": sorted(utterance_ids),
            "audio": audio,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def path_for(self, key: str) -> Path:
        return self.directory / f"{key}.acx"

    def load(self, key: str) -> Optional[ExampleSet]:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            example_set = decode_example_set(path.read_bytes(), source=str(path))
        except FormatError:
            logger.warning("example_cache_corrupt", path=str(path))
            return None
        logger.debug("example_cache_hit", key=key[:12], examples=len(example_set))
        return example_set

    def save(self, key: str, example_set: ExampleSet) -> Path:
        path = self.path_for(key)
        tmp = path.with_suffix(".tmp")
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp.write_bytes(encode_example_set(example_set, key))
            os.replace(tmp, path)
        except OSError as exc:
            raise CorpusIOError(f"Cannot write example cache {path}: {exc}") from exc
        logger.debug("example_cache_saved", key=key[:12], examples=len(example_set))
        return path
