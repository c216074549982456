"""
Deterministic synthetic corpus.

Each utterance is a random phone sequence rendered twice: as a video of a
cartoon vocal tract (constriction location encodes place, aperture encodes
manner, a glottis blob encodes voicing) and as audio whose excitation
follows the phone's manner and voicing and whose resonance follows its
place. Speakers differ by anatomy jitter and pitch, so speaker-independent
splits test generalisation.

Everything is a pure function of the SynthSpec: the per-utterance random
stream is keyed by (seed, speaker, sentence), and files are written
byte-identically whatever the worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from artiphon.core.config import settings
from artiphon.core.logging import get_logger
from artiphon.core.utils.decorators import timer
from artiphon.features.alignment.frames import as_rate, frame_midpoints, frame_times, phonemes_at
from artiphon.platform.phonology import (
    ARPABET_INVENTORY,
    SIL,
    Dimension,
    PhonemeClasses,
    PhonemeMap,
    class_index,
    default_phoneme_map,
)
from artiphon.platform.storage_layer import (
    Gender,
    Interval,
    Manifest,
    Transcript,
    Utterance,
    VideoClip,
    format_fps,
    load_manifest,
    write_audio,
    write_manifest,
    write_rvf,
    write_transcript,
)

logger = get_logger(__name__)

# transcript boundaries are integer multiples of 0.1 ms
TIME_UNITS_PER_SECOND = 10000

# vowels lead the inventory
VOWELS = ARPABET_INVENTORY[:15]

# constriction depth by manner: 1.0 is a full closure
_APERTURE_DEPTH = {
    "Silence": 0.0,
    "Stop": 1.0,
    "Nasal": 1.0,
    "Fricative": 0.82,
    "Approximant": 0.6,
    "Vowel": 0.35,
}

# position of the constriction along the tract, lips = 0, glottis = 1
_PLACE_POSITION = {
    "Labial": 0.02,
    "Dental": 0.12,
    "Alveolar": 0.25,
    "Postalveolar": 0.35,
    "Palatal": 0.5,
    "Velar": 0.65,
    "Glottal": 0.95,
}


class SynthSpec(BaseModel):
    """
    Parameters of a synthetic corpus.

    ``source_*`` fields set the rates and size the files are written at;
    they default to the target values, so no conversion happens on read.
    """

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    n_speakers: int = Field(default=10, ge=2)
    genders: Optional[List[Gender]] = Field(default=None, description="Per-speaker gender, default alternating M/F")
    sentences_per_speaker: int = Field(default=12, ge=1)
    phones_per_sentence: int = Field(default=12, ge=1)
    fps: Fraction = Field(default=Fraction(15))
    sample_rate: int = Field(default=16000, gt=0)
    image_size: int = Field(default=64, ge=16)
    seed: int = Field(default=7, ge=0)
    source_fps: Optional[Fraction] = None
    source_sample_rate: Optional[int] = Field(default=None, gt=0)
    source_image_size: Optional[int] = Field(default=None, ge=16)
    min_phone_seconds: float = Field(default=0.08, gt=0.0)
    max_phone_seconds: float = Field(default=0.22, gt=0.0)
    pause_probability: float = Field(default=0.1, ge=0.0, le=1.0)
    noise_std: float = Field(default=10.0, ge=0.0, description="Pixel noise σ")

    @field_validator("fps", "source_fps", mode="before")
    @classmethod
    def validate_rate(cls, v: Any) -> Optional[Fraction]:
        if v is None:
            return None
        fps = as_rate(v)
        if fps <= 0:
            raise ValueError("frame rates must be positive")
        return fps

    @field_serializer("fps", "source_fps")
    def serialize_rate(self, v: Optional[Fraction]) -> Optional[str]:
        return format_fps(v) if v is not None else None

    @model_validator(mode="after")
    def validate_roster(self) -> "SynthSpec":
        if self.genders is not None and len(self.genders) != self.n_speakers:
            raise ValueError(f"genders lists {len(self.genders)} speakers, n_speakers is {self.n_speakers}")
        if self.max_phone_seconds < self.min_phone_seconds:
            raise ValueError("max_phone_seconds must be >= min_phone_seconds")
        return self

    @property
    def roster(self) -> List[Tuple[str, Gender]]:
        genders = self.genders or [Gender.MALE if i % 2 == 0 else Gender.FEMALE for i in range(self.n_speakers)]
        return [(f"spk{i + 1:02d}", g) for i, g in enumerate(genders)]

    @property
    def video_fps(self) -> Fraction:
        return self.source_fps if self.source_fps is not None else self.fps

    @property
    def audio_rate(self) -> int:
        return self.source_sample_rate or self.sample_rate

    @property
    def frame_size(self) -> int:
        return self.source_image_size or self.image_size


class SpeakerAnatomy(BaseModel):
    """Per-speaker geometry, pitch and intensity jitter."""

    model_config = ConfigDict(frozen=True)

    offset_x: float
    offset_y: float
    scale: float
    tract_width: float
    tissue_gain: float
    f0: float

    @classmethod
    def draw(cls, rng: np.random.Generator, gender: Gender) -> "SpeakerAnatomy":
        low, high = (100.0, 140.0) if gender == Gender.MALE else (180.0, 240.0)
        return cls(
            offset_x=float(rng.uniform(-0.05, 0.05)),
            offset_y=float(rng.uniform(-0.05, 0.05)),
            scale=float(rng.uniform(0.9, 1.1)),
            tract_width=float(rng.uniform(0.06, 0.08)),
            tissue_gain=float(rng.uniform(0.85, 1.0)),
            f0=float(rng.uniform(low, high)),
        )


class _TractGeometry:
    """Pixel-wise distance to the tract centreline, fixed per speaker."""

    SAMPLES = 96

    def __init__(self, size: int, anatomy: SpeakerAnatomy):
        self.size = size
        self.anatomy = anatomy
        s = np.linspace(0.0, 1.0, self.SAMPLES)
        lips, palate, glottis = np.array([0.12, 0.55]), np.array([0.75, 0.35]), np.array([0.62, 0.92])
        curve = (
            ((1 - s) ** 2)[:, None] * lips
            + (2 * (1 - s) * s)[:, None] * palate
            + (s**2)[:, None] * glottis
        )
        centre = np.array([0.5, 0.55])
        curve = (curve - centre) * anatomy.scale + centre + [anatomy.offset_x, anatomy.offset_y]
        self.curve = curve * size

        yy, xx = np.mgrid[0:size, 0:size] + 0.5
        pixels = np.stack([xx.ravel(), yy.ravel()], axis=1)
        dist = np.linalg.norm(pixels[:, None, :] - self.curve[None, :, :], axis=2)
        nearest = dist.argmin(axis=1)
        self.distance = dist[np.arange(pixels.shape[0]), nearest].reshape(size, size)
        self.position = s[nearest].reshape(size, size)

        head = ((xx / size - 0.5) / 0.46) ** 2 + ((yy / size - 0.55) / 0.44) ** 2 <= 1.0
        self.head = head
        self.xx, self.yy = xx, yy

    def point(self, s: float) -> np.ndarray:
        return self.curve[min(int(round(s * (self.SAMPLES - 1))), self.SAMPLES - 1)]

    def blob(self, centre: np.ndarray, radius: float) -> np.ndarray:
        d2 = (self.xx - centre[0]) ** 2 + (self.yy - centre[1]) ** 2
        return 1.0 / (1.0 + np.exp((np.sqrt(d2) - radius) / 0.8))


def _constriction_position(phoneme: str, classes: PhonemeClasses) -> Optional[float]:
    if classes.manner == "Silence":
        return None
    if classes.place is None:
        return 0.3 + 0.5 * VOWELS.index(phoneme) / (len(VOWELS) - 1)
    return _PLACE_POSITION[classes.place]


def render_frame(
    geometry: _TractGeometry,
    phoneme: str,
    classes: PhonemeClasses,
    rng: np.random.Generator,
    noise_std: float,
) -> np.ndarray:
    """One uint8 frame of the tract shaped for ``phoneme``."""
    size = geometry.size
    anatomy = geometry.anatomy
    half_width = anatomy.tract_width * size
    position = _constriction_position(phoneme, classes)
    width = np.full((size, size), half_width)
    if position is not None:
        depth = _APERTURE_DEPTH[classes.manner]
        width = half_width * (1.0 - depth * np.exp(-(((geometry.position - position) / 0.06) ** 2)))

    airway = 1.0 / (1.0 + np.exp((geometry.distance - width) / 0.8))
    tissue = 170.0 * anatomy.tissue_gain
    image = np.where(geometry.head, tissue * (1.0 - airway) + 20.0 * airway, 8.0)

    velum = geometry.point(0.55) + np.array([0.0, -0.12 * size])
    nasal_port = geometry.blob(velum, 0.05 * size)
    if classes.manner == "Nasal":
        image = image * (1.0 - nasal_port) + 20.0 * nasal_port

    glottis = geometry.blob(geometry.point(0.97), 0.035 * size)
    level = {"Voiced": 235.0, "Voiceless": 20.0}.get(classes.voicing, 120.0)
    image = image * (1.0 - glottis) + level * glottis

    image = image + rng.normal(0.0, noise_std, size=image.shape)
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


def _resonance(phoneme: str, classes: PhonemeClasses) -> float:
    if classes.place is None:
        return 350.0 + 100.0 * VOWELS.index(phoneme)
    return 600.0 + 300.0 * class_index(Dimension.PLACE, classes.place)


def _harmonics(t: np.ndarray, f0: float, centre: float, sample_rate: int) -> np.ndarray:
    n_harmonics = max(1, int(0.45 * sample_rate // f0))
    freqs = f0 * np.arange(1, n_harmonics + 1)
    amps = (np.exp(-(((freqs - centre) / 350.0) ** 2)) + 0.15) / np.sqrt(np.arange(1, n_harmonics + 1))
    wave = np.sin(2 * np.pi * np.outer(t, freqs)) @ amps
    peak = np.abs(wave).max()
    return wave / peak if peak > 0 else wave


def _band_noise(n: int, centre: float, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    spectrum = np.fft.rfft(rng.normal(0.0, 1.0, n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    shaped = np.fft.irfft(spectrum * np.exp(-(((freqs - centre) / 1500.0) ** 2)), n)
    peak = np.abs(shaped).max()
    return shaped / peak if peak > 0 else shaped


def synthesize_phone(
    phoneme: str,
    classes: PhonemeClasses,
    start_sample: int,
    n: int,
    sample_rate: int,
    f0: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Float samples (PCM16 scale) of one phone.

    Voiced phones carry harmonics of ``f0`` shaped by a place-dependent
    resonance; fricatives add band noise; stops are a closure followed by a
    decaying burst.
    """
    if n <= 0 or classes.manner == "Silence":
        return np.zeros(max(n, 0))
    t = (start_sample + np.arange(n)) / sample_rate
    centre = _resonance(phoneme, classes)
    voiced = classes.voicing == "Voiced"
    manner = classes.manner

    if manner == "Vowel":
        out = 6000.0 * _harmonics(t, f0, centre, sample_rate)
    elif manner == "Approximant":
        out = 4000.0 * _harmonics(t, f0, centre, sample_rate)
    elif manner == "Nasal":
        out = 3000.0 * _harmonics(t, f0, 250.0, sample_rate)
    elif manner == "Fricative":
        out = 2500.0 * _band_noise(n, min(3.0 * centre, 0.4 * sample_rate), sample_rate, rng)
        if voiced:
            out = out + 1500.0 * _harmonics(t, f0, centre, sample_rate)
    else:
        closure = int(0.6 * n)
        out = np.zeros(n)
        if voiced:
            out[:closure] = 600.0 * _harmonics(t[:closure], f0, 250.0, sample_rate)
        burst = n - closure
        decay = np.exp(-np.arange(burst) / (0.01 * sample_rate))
        out[closure:] = 5000.0 * decay * _band_noise(burst, min(2.0 * centre, 0.4 * sample_rate), sample_rate, rng)
        if not voiced:
            out[closure:] += 1000.0 * _band_noise(burst, 0.3 * sample_rate, sample_rate, rng)

    ramp = min(n // 2, max(1, int(0.003 * sample_rate)))
    envelope = np.ones(n)
    envelope[:ramp] = np.linspace(0.0, 1.0, ramp)
    envelope[n - ramp :] = np.minimum(envelope[n - ramp :], np.linspace(1.0, 0.0, ramp))
    return out * envelope


def sample_transcript(spec: SynthSpec, rng: np.random.Generator) -> Tuple[Transcript, int]:
    """
    Random phone sequence with silent edges and occasional pauses.

    Returns:
        Transcript and the utterance duration in 0.1 ms units. Leading and
        trailing silence are left as gaps.
    """

    def units(low: float, high: float) -> int:
        return int(rng.integers(int(low * TIME_UNITS_PER_SECOND), int(high * TIME_UNITS_PER_SECOND) + 1))

    cursor = units(0.1, 0.3)
    intervals: List[Interval] = []
    speech = ARPABET_INVENTORY
    for i in range(spec.phones_per_sentence):
        if i > 0 and rng.random() < spec.pause_probability:
            pause = units(0.1, 0.25)
            intervals.append(
                Interval(start=cursor / TIME_UNITS_PER_SECOND, end=(cursor + pause) / TIME_UNITS_PER_SECOND, phoneme=SIL)
            )
            cursor += pause
        phoneme = speech[int(rng.integers(len(speech)))]
        length = units(spec.min_phone_seconds, spec.max_phone_seconds)
        intervals.append(
            Interval(start=cursor / TIME_UNITS_PER_SECOND, end=(cursor + length) / TIME_UNITS_PER_SECOND, phoneme=phoneme)
        )
        cursor += length
    total = cursor + units(0.1, 0.3)
    return Transcript(intervals=intervals), total


class _UtteranceJob(BaseModel):
    model_config = ConfigDict(frozen=True)

    speaker_index: int
    speaker_id: str
    gender: Gender
    sentence_index: int
    anatomy: SpeakerAnatomy

    @property
    def utterance_id(self) -> str:
        return f"{self.speaker_id}_s{self.sentence_index + 1:03d}"


def synthesize_utterance(
    spec: SynthSpec,
    job: _UtteranceJob,
    out_dir: Path,
    phoneme_map: PhonemeMap,
    geometry: _TractGeometry,
) -> Utterance:
    """Render and write the video, audio and transcript of one utterance."""
    rng = np.random.default_rng([spec.seed, job.speaker_index, job.sentence_index + 1])
    transcript, total_units = sample_transcript(spec, rng)
    duration = Fraction(total_units, TIME_UNITS_PER_SECOND)

    fps = spec.video_fps
    n_frames = math.floor(duration * fps)
    phones = phonemes_at(transcript, frame_midpoints(frame_times(n_frames, fps), fps))
    frames = np.stack(
        [render_frame(geometry, p, phoneme_map.entry(p), rng, spec.noise_std) for p in phones]
    )

    sample_rate = spec.audio_rate
    n_samples = math.floor(duration * sample_rate)
    audio = rng.normal(0.0, 20.0, n_samples)
    for interval in transcript.intervals:
        lo = math.floor(Fraction(interval.start).limit_denominator(TIME_UNITS_PER_SECOND) * sample_rate)
        hi = min(n_samples, math.floor(Fraction(interval.end).limit_denominator(TIME_UNITS_PER_SECOND) * sample_rate))
        audio[lo:hi] += synthesize_phone(
            interval.phoneme,
            phoneme_map.entry(interval.phoneme),
            lo,
            hi - lo,
            sample_rate,
            job.anatomy.f0,
            rng,
        )
    samples = np.clip(np.rint(audio), -32768, 32767).astype(np.int16)

    base = out_dir / job.speaker_id / job.utterance_id
    video_path = write_rvf(base.with_suffix(".rvf"), VideoClip(frames=frames, fps=fps))
    audio_path = write_audio(base.with_suffix(".wav"), samples, sample_rate)
    transcript_path = write_transcript(base.with_suffix(".tsv"), transcript)

    logger.debug(
        "utterance_synthesized",
        utterance=job.utterance_id,
        frames=n_frames,
        samples=n_samples,
        phones=len(transcript),
    )
    return Utterance(
        id=job.utterance_id,
        speaker_id=job.speaker_id,
        gender=job.gender,
        video_path=video_path,
        audio_path=audio_path,
        transcript_path=transcript_path,
        fps=fps,
        sample_rate=sample_rate,
    )


@timer
def synthesize_corpus(
    spec: SynthSpec,
    out_dir: Union[str, Path],
    phoneme_map: Optional[PhonemeMap] = None,
) -> Manifest:
    """
    Generate a corpus and its manifest under ``out_dir``.

    Layout: ``{out_dir}/{speaker}/{utterance}.{rvf,wav,tsv}`` plus
    ``{out_dir}/manifest.json``.

    Args:
        spec: Corpus parameters
        out_dir: Output directory (created if needed)
        phoneme_map: Phoneme → class mapping (default: shipped map)

    Returns:
        The written manifest, loaded back so its digest is set

    Raises:
        CorpusIOError: If files cannot be written
    """
    out_dir = Path(out_dir)
    phoneme_map = phoneme_map or default_phoneme_map()
    size = spec.frame_size

    jobs: List[_UtteranceJob] = []
    geometries: Dict[str, _TractGeometry] = {}
    for index, (speaker_id, gender) in enumerate(spec.roster):
        anatomy = SpeakerAnatomy.draw(np.random.default_rng([spec.seed, index, 0]), gender)
        geometries[speaker_id] = _TractGeometry(size, anatomy)
        for sentence in range(spec.sentences_per_speaker):
            jobs.append(
                _UtteranceJob(
                    speaker_index=index,
                    speaker_id=speaker_id,
                    gender=gender,
                    sentence_index=sentence,
                    anatomy=anatomy,
                )
            )

    def run(job: _UtteranceJob) -> Utterance:
        return synthesize_utterance(spec, job, out_dir, phoneme_map, geometries[job.speaker_id])

    with ThreadPoolExecutor(max_workers=settings.threads) as pool:
        utterances = list(pool.map(run, jobs))

    manifest_path = write_manifest(out_dir / "manifest.json", utterances)
    manifest = load_manifest(manifest_path)
    logger.info(
        "corpus_synthesized",
        path=str(manifest_path),
        speakers=spec.n_speakers,
        utterances=len(utterances),
        seed=spec.seed,
    )
    return manifest
