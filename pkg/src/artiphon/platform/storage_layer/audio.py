"""
PCM16 mono WAV input/output and sample-rate conversion.

Reading uses the stdlib ``wave`` container parser with numpy for the sample
payload; resampling is a 64-tap Kaiser-windowed sinc interpolator.
"""

import wave
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from artiphon.core.exceptions import CorpusIOError, FormatError, UnsupportedEncodingError
from artiphon.core.logging import get_logger

logger = get_logger(__name__)

DEFAULT_SAMPLE_RATE = 16000
SAMPLE_WIDTH = 2
PCM16_SCALE = 32768.0

RESAMPLE_TAPS = 64
KAISER_BETA = 8.0
_RESAMPLE_CHUNK = 16384


class AudioClip(BaseModel):
    """Mono signed 16-bit PCM samples at a known rate."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray
    sample_rate: int

    @field_validator("samples")
    @classmethod
    def validate_samples(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 1:
            raise ValueError("audio must be mono (1-D)")
        if v.dtype != np.int16:
            raise ValueError(f"audio samples must be int16, got {v.dtype}")
        return v

    @field_validator("sample_rate")
    @classmethod
    def validate_rate(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("sample_rate must be positive")
        return v

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.n_samples / self.sample_rate


def _kaiser(x: np.ndarray, half_width: float, beta: float) -> np.ndarray:
    ratio = np.clip(x / half_width, -1.0, 1.0)
    window = np.i0(beta * np.sqrt(1.0 - ratio**2)) / np.i0(beta)
    return np.where(np.abs(x) < half_width, window, 0.0)


def resample(samples: np.ndarray, source_rate: int, target_rate: int) -> np.ndarray:
    """
    Windowed-sinc sample-rate conversion.

    Output sample n sits at source position n·source_rate/target_rate and is
    a Kaiser-weighted (β=8) sum over the 64 nearest source samples. When
    downsampling, the sinc cutoff drops to the target Nyquist frequency.

    Args:
        samples: 1-D int16 or float signal
        source_rate: Input rate in Hz
        target_rate: Output rate in Hz

    Returns:
        int16 signal of floor(n·target_rate/source_rate) samples

    Example:
        >>> resample(np.zeros(20000, dtype=np.int16), 20000, 16000).shape
        (16000,)
    """
    if source_rate == target_rate:
        return np.asarray(samples, dtype=np.int16).copy()

    signal = np.asarray(samples, dtype=np.float64)
    n_out = (signal.shape[0] * target_rate) // source_rate
    cutoff = min(1.0, target_rate / source_rate)
    half = RESAMPLE_TAPS // 2

    # Pad so every tap index lands inside the buffer.
    padded = np.concatenate([np.zeros(half), signal, np.zeros(half + 1)])
    taps = np.arange(-half + 1, half + 1)

    out = np.empty(n_out, dtype=np.float64)
    for start in range(0, n_out, _RESAMPLE_CHUNK):
        n = np.arange(start, min(start + _RESAMPLE_CHUNK, n_out))
        position = n * (source_rate / target_rate)
        base = np.floor(position).astype(np.int64)
        index = base[:, None] + taps[None, :]
        distance = position[:, None] - index
        weights = cutoff * np.sinc(cutoff * distance) * _kaiser(distance, half, KAISER_BETA)
        out[start : start + n.shape[0]] = np.sum(padded[index + half] * weights, axis=1)

    return np.clip(np.rint(out), -32768, 32767).astype(np.int16)


def read_audio(path: Union[str, Path], target_rate: Optional[int] = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """
    Read a RIFF/WAVE PCM16 mono file, resampling to ``target_rate``.

    Args:
        path: WAV file
        target_rate: Output rate, or None to keep the file's rate

    Returns:
        AudioClip

    Raises:
        FormatError: Not a RIFF/WAVE file, or a truncated one
        UnsupportedEncodingError: Non-PCM, non-16-bit or multi-channel audio
        CorpusIOError: File cannot be opened
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sample_width = wf.getsampwidth()
            source_rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as e:
        if "unknown format" in str(e):
            raise UnsupportedEncodingError(
                f"{path.name} is not PCM-encoded", details={"path": str(path), "error": str(e)}
            ) from e
        raise FormatError(f"{path.name} is not a RIFF/WAVE file", details={"path": str(path), "error": str(e)}) from e
    except EOFError as e:
        raise FormatError(f"{path.name} is truncated", details={"path": str(path)}) from e
    except OSError as e:
        raise CorpusIOError(f"Cannot read {path}", details={"error": str(e)}) from e

    if sample_width != SAMPLE_WIDTH or n_channels != 1:
        raise UnsupportedEncodingError(
            f"{path.name} must be 16-bit mono",
            details={"path": str(path), "sample_width": sample_width, "channels": n_channels},
        )
    if len(raw) != n_frames * SAMPLE_WIDTH:
        raise FormatError(
            f"{path.name} declares {n_frames} samples but holds {len(raw) // SAMPLE_WIDTH}",
            details={"path": str(path)},
        )

    samples = np.frombuffer(raw, dtype="<i2").astype(np.int16)
    if target_rate is not None and target_rate != source_rate:
        logger.debug("audio_resampled", path=str(path), source_rate=source_rate, target_rate=target_rate)
        samples = resample(samples, source_rate, target_rate)
        source_rate = target_rate

    return AudioClip(samples=samples, sample_rate=source_rate)


def write_audio(path: Union[str, Path], samples: np.ndarray, sample_rate: int) -> Path:
    """
    Write int16 mono samples as a PCM16 WAV file.

    Float input is taken to be in [-1, 1] and hard-clipped.
    """
    path = Path(path)
    data = np.asarray(samples)
    if data.dtype != np.int16:
        data = np.clip(np.rint(data * 32767.0), -32768, 32767).astype(np.int16)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(SAMPLE_WIDTH)
            wf.setframerate(int(sample_rate))
            wf.writeframes(data.astype("<i2").tobytes())
    except OSError as e:
        raise CorpusIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    return path

