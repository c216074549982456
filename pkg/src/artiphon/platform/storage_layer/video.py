"""
Grayscale video clips: the RVF1 container and PGM frame directories.

RVF1 layout (all integers little-endian u32)::

    b"RVF1" | height | width | n_frames | fps_num | fps_den | n_frames*height*width bytes

Frames are row-major unsigned 8-bit intensity. A PGM directory holds one
binary (P5) ``*.pgm`` file per frame, ordered by file name, plus an optional
``fps`` file containing ``num/den``.
"""

import math
import re
import struct
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from artiphon.core.exceptions import CorpusIOError, FormatError, UnsupportedEncodingError
from artiphon.core.logging import get_logger

logger = get_logger(__name__)

RVF_MAGIC = b"RVF1"
_RVF_HEADER = struct.Struct("<4sIIIII")
_PGM_HEADER = re.compile(rb"\AP5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


def parse_fps(value: Union[str, int, float, Fraction]) -> Fraction:
    """
    Frame rate as an exact rational.

    Example:
        >>> parse_fps("2318/100")
        Fraction(1159, 50)
    """
    try:
        fps = Fraction(str(value).strip()) if not isinstance(value, Fraction) else value
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"Invalid frame rate {value!r}") from e
    if fps <= 0:
        raise FormatError(f"Frame rate must be positive, got {value!r}")
    return fps


def format_fps(fps: Fraction) -> str:
    return f"{fps.numerator}/{fps.denominator}"


class VideoClip(BaseModel):
    """Stack of same-shape uint8 grayscale frames at a rational frame rate."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frames: np.ndarray
    fps: Fraction

    @field_validator("frames")
    @classmethod
    def validate_frames(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 3:
            raise ValueError("frames must be [n_frames, height, width]")
        if v.dtype != np.uint8:
            raise ValueError(f"frames must be uint8, got {v.dtype}")
        return v

    @field_validator("fps")
    @classmethod
    def validate_fps(cls, v: Fraction) -> Fraction:
        if v <= 0:
            raise ValueError("fps must be positive")
        return v

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    @property
    def duration(self) -> float:
        return float(self.n_frames / self.fps)


def decimate_frames(frames: np.ndarray, source_fps: Fraction, target_fps: Fraction) -> np.ndarray:
    """
    Nearest-frame rate conversion.

    Output frame j shows the source frame nearest to time j/target_fps;
    the output has floor(duration·target_fps) frames.
    """
    if source_fps == target_fps:
        return frames
    n_source = frames.shape[0]
    n_out = math.floor(Fraction(n_source) / source_fps * target_fps)
    # floor(j·src/tgt + 1/2), exact in rationals
    ratio = source_fps / target_fps
    index = [min(n_source - 1, math.floor(j * ratio + Fraction(1, 2))) for j in range(n_out)]
    return frames[np.asarray(index, dtype=np.int64)] if n_out else frames[:0]


def resize_bilinear(frames: np.ndarray, size: int) -> np.ndarray:
    """
    Bilinear resize of [n, h, w] uint8 frames to [n, size, size].

    Pixel centres are aligned (half-pixel convention); edges clamp.
    """
    n, h, w = frames.shape
    if h == size and w == size:
        return frames

    def axis(n_in: int) -> tuple:
        coord = (np.arange(size) + 0.5) * (n_in / size) - 0.5
        coord = np.clip(coord, 0.0, n_in - 1)
        lo = np.floor(coord).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, coord - lo

    y0, y1, fy = axis(h)
    x0, x1, fx = axis(w)
    src = frames.astype(np.float64)
    top = src[:, y0][:, :, x0] * (1 - fx) + src[:, y0][:, :, x1] * fx
    bottom = src[:, y1][:, :, x0] * (1 - fx) + src[:, y1][:, :, x1] * fx
    out = top * (1 - fy)[None, :, None] + bottom * fy[None, :, None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _conform(
    frames: np.ndarray,
    fps: Fraction,
    target_fps: Optional[Fraction],
    image_size: Optional[int],
) -> VideoClip:
    if target_fps is not None and target_fps != fps:
        frames = decimate_frames(frames, fps, target_fps)
        fps = target_fps
    if image_size is not None:
        frames = resize_bilinear(frames, image_size)
    return VideoClip(frames=frames, fps=fps)


def read_rvf(path: Path) -> VideoClip:
    """Decode an RVF1 file without any conversion."""
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CorpusIOError(f"Cannot read {path}", details={"error": str(e)}) from e

    if len(blob) < _RVF_HEADER.size:
        raise FormatError(f"{path.name} is shorter than an RVF1 header", details={"path": str(path)})
    magic, height, width, n_frames, fps_num, fps_den = _RVF_HEADER.unpack_from(blob)
    if magic != RVF_MAGIC:
        raise FormatError(f"{path.name} has bad magic {magic!r}", details={"path": str(path)})
    if fps_num == 0 or fps_den == 0 or height == 0 or width == 0:
        raise FormatError(f"{path.name} has a degenerate header", details={"path": str(path)})

    expected = n_frames * height * width
    payload = blob[_RVF_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"{path.name} payload is {len(payload)} bytes, header implies {expected}",
            details={"path": str(path)},
        )
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(n_frames, height, width).copy()
    return VideoClip(frames=frames, fps=Fraction(fps_num, fps_den))


def write_rvf(path: Union[str, Path], clip: VideoClip) -> Path:
    """Encode a clip as RVF1."""
    path = Path(path)
    header = _RVF_HEADER.pack(
        RVF_MAGIC,
        clip.height,
        clip.width,
        clip.n_frames,
        clip.fps.numerator,
        clip.fps.denominator,
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header + np.ascontiguousarray(clip.frames).tobytes())
    except OSError as e:
        raise CorpusIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    return path


def _read_pgm(path: Path) -> np.ndarray:
    blob = path.read_bytes()
    if blob[:2] == b"P2":
        raise UnsupportedEncodingError(f"{path.name} is ASCII PGM; only binary P5 is read")
    match = _PGM_HEADER.match(blob)
    if match is None:
        raise FormatError(f"{path.name} is not a binary PGM", details={"path": str(path)})
    width, height, maxval = (int(g) for g in match.groups())
    if maxval > 255:
        raise UnsupportedEncodingError(f"{path.name} is 16-bit PGM", details={"maxval": maxval})
    payload = blob[match.end() : match.end() + width * height]
    if len(payload) != width * height:
        raise FormatError(f"{path.name} is truncated", details={"path": str(path)})
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def read_pgm_dir(path: Path, fps: Optional[Fraction] = None) -> VideoClip:
    """Decode a directory of P5 PGM frames."""
    fps_file = path / "fps"
    if fps is None and fps_file.exists():
        fps = parse_fps(fps_file.read_text(encoding="utf-8"))
    if fps is None:
        raise FormatError(f"No frame rate for PGM directory {path}", details={"path": str(path)})

    files = sorted(path.glob("*.pgm"))
    if not files:
        raise FormatError(f"{path} contains no .pgm frames", details={"path": str(path)})
    frames = [_read_pgm(f) for f in files]
    if len({f.shape for f in frames}) != 1:
        raise FormatError(f"Frames in {path} differ in shape", details={"path": str(path)})
    return VideoClip(frames=np.stack(frames), fps=fps)


def read_video(
    path: Union[str, Path],
    target_fps: Optional[Fraction] = None,
    image_size: Optional[int] = None,
    fps: Optional[Fraction] = None,
) -> VideoClip:
    """
    Read an RVF1 file or PGM directory, converting rate and size on demand.

    Args:
        path: ``.rvf`` file or directory of ``.pgm`` frames
        target_fps: Output frame rate (nearest-frame decimation), None to keep
        image_size: Output side length (bilinear), None to keep
        fps: Frame rate for PGM directories without an ``fps`` file

    Returns:
        VideoClip

    Raises:
        FormatError: Bad magic, header or payload length
        UnsupportedEncodingError: PGM variants other than 8-bit binary
        CorpusIOError: Missing or unreadable file
    """
    path = Path(path)
    if path.is_dir():
        clip = read_pgm_dir(path, fps=fps)
    elif path.exists():
        clip = read_rvf(path)
    else:
        raise CorpusIOError(f"Video not found: {path}", details={"path": str(path)})

    return _conform(clip.frames, clip.fps, target_fps, image_size)
