"""
Phone-level transcripts.

Format: UTF-8 TSV, one interval per line, ``start_s<TAB>end_s<TAB>PHONEME``
with decimal seconds and LF line endings. Blank lines and ``#`` comments are
ignored. Gaps between intervals are implicit silence.
"""

from pathlib import Path
from typing import Iterable, List, Optional, Union

from pydantic import BaseModel, ConfigDict

from artiphon.core.exceptions import CorpusIOError, OrderError, OverlapError, ParseError
from artiphon.core.logging import get_logger
from artiphon.platform.phonology import PhonemeMap, default_phoneme_map, normalize_symbol

logger = get_logger(__name__)


class Interval(BaseModel):
    """One labelled span, half-open [start, end)."""

    model_config = ConfigDict(frozen=True)

    start: float
    end: float
    phoneme: str


class Transcript(BaseModel):
    """Sorted, non-overlapping phone intervals."""

    model_config = ConfigDict(frozen=True)

    intervals: List[Interval]

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def end(self) -> float:
        return self.intervals[-1].end if self.intervals else 0.0

    def shifted(self, delta: float) -> "Transcript":
        """Copy with every interval moved by ``delta`` seconds."""
        return Transcript(
            intervals=[
                Interval(start=i.start + delta, end=i.end + delta, phoneme=i.phoneme)
                for i in self.intervals
            ]
        )


def validate_intervals(intervals: Iterable[Interval], source: str = "<intervals>") -> Transcript:
    """
    Check ordering and overlap and build a Transcript.

    Raises:
        ParseError: start < 0 or start >= end
        OrderError: intervals not sorted by start
        OverlapError: an interval starts before its predecessor ends
    """
    checked: List[Interval] = []
    for i, interval in enumerate(intervals):
        if interval.start < 0 or interval.start >= interval.end:
            raise ParseError(
                f"Interval must satisfy 0 <= start < end, got ({interval.start}, {interval.end})",
                path=source,
                details={"interval": i},
            )
        if checked:
            previous = checked[-1]
            if interval.start < previous.start:
                raise OrderError(
                    f"Interval {i} starts at {interval.start} before interval {i - 1} ({previous.start})",
                    details={"path": source, "interval": i},
                )
            if interval.start < previous.end:
                raise OverlapError(
                    f"Interval {i} starts at {interval.start} inside interval {i - 1} "
                    f"[{previous.start}, {previous.end})",
                    details={"path": source, "interval": i},
                )
        checked.append(interval)
    return Transcript(intervals=checked)


def parse_transcript_text(
    text: str,
    source: str = "<string>",
    phoneme_map: Optional[PhonemeMap] = None,
) -> Transcript:
    """
    Parse transcript text.

    Symbols are normalised (stress digits stripped, non-speech labels to SIL)
    and checked against the phoneme map.

    Example:
        >>> parse_transcript_text("0.10\\t0.18\\tAA1").intervals[0].phoneme
        'AA'
    """
    phoneme_map = phoneme_map or default_phoneme_map()
    intervals: List[Interval] = []

    for line_number, line in enumerate(text.split("\n"), start=1):
        body = line.split("#", 1)[0].rstrip("\r")
        if not body.strip():
            continue
        fields = [f.strip() for f in body.split("\t")]
        if len(fields) != 3:
            raise ParseError(
                f"Expected 3 tab-separated fields, got {len(fields)}",
                path=source,
                line_number=line_number,
            )
        try:
            start, end = float(fields[0]), float(fields[1])
        except ValueError:
            raise ParseError(f"Bad time value in {body!r}", path=source, line_number=line_number) from None
        symbol = normalize_symbol(fields[2])
        # raises UnknownPhonemeError
        phoneme_map.entry(symbol)
        if start < 0 or start >= end:
            raise ParseError(
                f"Interval must satisfy 0 <= start < end, got ({start}, {end})",
                path=source,
                line_number=line_number,
            )
        intervals.append(Interval(start=start, end=end, phoneme=symbol))

    return validate_intervals(intervals, source=source)


def parse_transcript(path: Union[str, Path], phoneme_map: Optional[PhonemeMap] = None) -> Transcript:
    """
    Read and validate a transcript file.

    Raises:
        CorpusIOError: File cannot be read
        ParseError: Malformed line
        OrderError: Unsorted intervals
        OverlapError: Overlapping intervals
        UnknownPhonemeError: Symbol outside the inventory
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CorpusIOError(f"Cannot read transcript {path}", details={"error": str(e)}) from e
    return parse_transcript_text(text, source=str(path), phoneme_map=phoneme_map)


def format_transcript(transcript: Transcript) -> str:
    return "".join(f"{i.start:.4f}\t{i.end:.4f}\t{i.phoneme}\n" for i in transcript.intervals)


def write_transcript(path: Union[str, Path], transcript: Transcript) -> Path:
    """Write intervals with 4-decimal times."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(format_transcript(transcript))
    except OSError as e:
        raise CorpusIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    return path
