"""
Corpus manifests.

A manifest is a JSON array of utterance records. Paths are stored relative
to the manifest's directory and ``fps`` as an exact ``"num/den"`` string.
"""

import enum
import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator
from pydantic import ValidationError as PydanticValidationError

from artiphon.core.exceptions import CorpusIOError, FormatError
from artiphon.core.logging import get_logger
from artiphon.platform.storage_layer.video import format_fps, parse_fps

logger = get_logger(__name__)


class Gender(str, enum.Enum):
    """Speaker gender as recorded in the corpus metadata."""

    MALE = "M"
    FEMALE = "F"


class Utterance(BaseModel):
    """One recording with its speaker metadata and media paths."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str = Field(min_length=1)
    speaker_id: str = Field(min_length=1)
    gender: Gender
    video_path: Path
    audio_path: Path
    transcript_path: Path
    fps: Fraction
    sample_rate: int = Field(gt=0)

    @field_validator("fps", mode="before")
    @classmethod
    def validate_fps(cls, v: Any) -> Fraction:
        return parse_fps(v)

    @field_serializer("fps")
    def serialize_fps(self, v: Fraction) -> str:
        return format_fps(v)

    def relative_to(self, root: Path) -> "Utterance":
        """Copy with paths made relative to ``root`` where possible."""

        def rel(p: Path) -> Path:
            try:
                return p.relative_to(root)
            except ValueError:
                return p

        return self.model_copy(
            update={
                "video_path": rel(self.video_path),
                "audio_path": rel(self.audio_path),
                "transcript_path": rel(self.transcript_path),
            }
        )

    def resolved(self, root: Path) -> "Utterance":
        return self.model_copy(
            update={
                "video_path": root / self.video_path,
                "audio_path": root / self.audio_path,
                "transcript_path": root / self.transcript_path,
            }
        )


class Manifest(BaseModel):
    """Utterances of a corpus with absolute paths."""

    model_config = ConfigDict(frozen=True)

    utterances: List[Utterance]
    digest: str = ""

    def __len__(self) -> int:
        return len(self.utterances)

    def speakers(self) -> List[Tuple[str, Gender]]:
        """Distinct (speaker_id, gender) pairs in first-seen order."""
        seen: Dict[str, Gender] = {}
        for u in self.utterances:
            seen.setdefault(u.speaker_id, u.gender)
        return list(seen.items())

    def for_speakers(self, speaker_ids: Sequence[str]) -> List[Utterance]:
        """Utterances of the given speakers, in manifest order."""
        wanted = set(speaker_ids)
        return [u for u in self.utterances if u.speaker_id in wanted]


def load_manifest(path: Union[str, Path], require_audio: bool = True) -> Manifest:
    """
    Load a manifest and check that referenced files exist.

    Args:
        path: Manifest JSON file
        require_audio: Also require audio files; video-only inference skips this

    Returns:
        Manifest with absolute paths and a content digest

    Raises:
        CorpusIOError: Manifest or a referenced file is missing
        FormatError: Manifest is not a JSON array of valid records
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CorpusIOError(f"Cannot read manifest {path}", details={"error": str(e)}) from e

    try:
        records = json.loads(blob)
    except json.JSONDecodeError as e:
        raise FormatError(f"Manifest {path} is not valid JSON", details={"error": str(e)}) from e
    if not isinstance(records, list):
        raise FormatError(f"Manifest {path} must be a JSON array")

    root = path.parent
    utterances: List[Utterance] = []
    for i, record in enumerate(records):
        try:
            utterance = Utterance.model_validate(record).resolved(root)
        except PydanticValidationError as e:
            raise FormatError(
                f"Manifest record {i} is invalid",
                details={"path": str(path), "errors": e.errors(include_url=False)},
            ) from e
        required = [utterance.video_path, utterance.transcript_path]
        if require_audio:
            required.append(utterance.audio_path)
        missing = [str(p) for p in required if not p.exists()]
        if missing:
            raise CorpusIOError(
                f"Utterance {utterance.id} references missing files",
                details={"missing": missing},
            )
        utterances.append(utterance)

    digest = hashlib.sha256(blob).hexdigest()
    logger.debug("manifest_loaded", path=str(path), utterances=len(utterances), digest=digest[:12])
    return Manifest(utterances=utterances, digest=digest)


def write_manifest(path: Union[str, Path], utterances: Sequence[Utterance]) -> Path:
    """Write utterances as a JSON array with paths relative to the manifest."""
    path = Path(path)
    root = path.parent
    records = [u.relative_to(root).model_dump(mode="json") for u in utterances]
    try:
        root.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise CorpusIOError(f"Cannot write manifest {path}", details={"error": str(e)}) from e
    return path
