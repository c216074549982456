"""
Phoneme to articulatory-class mapping.

The mapping is data, not code: it is read from a tab-separated file (the
grammar is documented at the top of ``data/arpabet_classes.tsv``) and
validated eagerly against the inventory and the reference class table.
"""

import hashlib
import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from artiphon.core.exceptions import (
    ContradictsReferenceTableError,
    CorpusIOError,
    IncompleteMapError,
    ParseError,
    UnknownPhonemeError,
)
from artiphon.core.logging import get_logger
from artiphon.platform.phonology.inventory import (
    ARPABET_INVENTORY,
    EXCLUDED,
    SIL,
    Dimension,
    PhonologicalClass,
    class_by_name,
    normalize_symbol,
)

logger = get_logger(__name__)

# Reference class table: every (phoneme, dimension) -> class pair it states.
# Loaded maps must agree with all of them.
REFERENCE_TABLE: Mapping[Tuple[str, Dimension], str] = MappingProxyType(
    {
        **{(p, Dimension.MANNER): "Stop" for p in ("P", "T", "K", "B", "D", "G")},
        **{(p, Dimension.MANNER): "Nasal" for p in ("N", "M", "NG")},
        **{(p, Dimension.MANNER): "Fricative" for p in ("S", "SH", "Z", "F")},
        (("Y", Dimension.MANNER)): "Approximant",
        **{(p, Dimension.MANNER): "Vowel" for p in ("AA", "EH", "IY", "OW", "UW")},
        **{(p, Dimension.PLACE): "Labial" for p in ("P", "B", "M", "F", "V")},
        **{(p, Dimension.PLACE): "Dental" for p in ("TH", "DH")},
        **{(p, Dimension.PLACE): "Alveolar" for p in ("T", "D", "N")},
        ("SH", Dimension.PLACE): "Postalveolar",
        ("Y", Dimension.PLACE): "Palatal",
        **{(p, Dimension.PLACE): "Velar" for p in ("K", "G", "NG")},
        ("HH", Dimension.PLACE): "Glottal",
        **{(p, Dimension.VOICING): "Voiceless" for p in ("P", "T", "K", "SH", "S")},
        **{(p, Dimension.VOICING): "Voiced" for p in ("M", "N", "B", "D", "G", "AA")},
    }
)

_SILENCE = "Silence"


class PhonemeClasses(BaseModel):
    """Class names of one phoneme; ``place`` is None when excluded."""

    model_config = ConfigDict(frozen=True)

    manner: str
    place: Optional[str]
    voicing: str

    def name_for(self, dim: Dimension) -> Optional[str]:
        """Class name in a dimension (None for an excluded place)."""
        if dim == Dimension.MANNER:
            return self.manner
        if dim == Dimension.PLACE:
            return self.place
        return self.voicing


class PhonemeMap:
    """
    Immutable phoneme -> (manner, place, voicing) mapping.

    ``class_of`` is total over the inventory. A phoneme whose place is
    excluded reports Silence for that dimension and ``is_excluded`` is true;
    callers mask those frames rather than train on the placeholder.
    """

    def __init__(self, entries: Mapping[str, PhonemeClasses]):
        self._entries: Mapping[str, PhonemeClasses] = MappingProxyType(dict(entries))

    def __contains__(self, symbol: object) -> bool:
        return isinstance(symbol, str) and normalize_symbol(symbol) in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def inventory(self) -> List[str]:
        """All mapped phoneme symbols, SIL included."""
        return list(self._entries)

    def entry(self, phoneme: str) -> PhonemeClasses:
        """
        Raw entry for a phoneme.

        Raises:
            UnknownPhonemeError: If the symbol is not in the inventory
        """
        symbol = normalize_symbol(phoneme)
        try:
            return self._entries[symbol]
        except KeyError:
            raise UnknownPhonemeError(phoneme) from None

    def class_of(self, phoneme: str, dim: Dimension) -> PhonologicalClass:
        """
        Class of a phoneme in a dimension.

        Example:
            >>> default_phoneme_map().class_of("P", Dimension.MANNER).name
            'Stop'

        Raises:
            UnknownPhonemeError: If the symbol is not in the inventory
        """
        name = self.entry(phoneme).name_for(Dimension(dim))
        return class_by_name(dim, name if name is not None else _SILENCE)

    def is_excluded(self, phoneme: str, dim: Dimension) -> bool:
        """Whether the phoneme's frames are masked out of this dimension's task."""
        return self.entry(phoneme).name_for(Dimension(dim)) is None

    def lookup_table(self, dim: Dimension) -> Dict[str, Tuple[int, bool]]:
        """symbol -> (class index, excluded) for fast per-frame labelling."""
        return {
            symbol: (self.class_of(symbol, dim).index, self.is_excluded(symbol, dim))
            for symbol in self._entries
        }

    def digest(self) -> str:
        """SHA-256 over the sorted (phoneme, manner, place, voicing) rows."""
        rows = sorted(
            (symbol, c.manner, c.place if c.place is not None else EXCLUDED, c.voicing)
            for symbol, c in self._entries.items()
        )
        return hashlib.sha256(json.dumps(rows, separators=(",", ":")).encode("utf-8")).hexdigest()


def _parse_class(dim: Dimension, raw: str, path: str, line_number: int) -> Optional[str]:
    if dim == Dimension.PLACE and raw.upper() == EXCLUDED:
        return None
    try:
        return class_by_name(dim, raw).name
    except KeyError:
        raise ParseError(
            f"Unknown {dim.value} class {raw!r}",
            path=path,
            line_number=line_number,
        ) from None


def parse_phoneme_map(text: str, source: str = "<string>") -> PhonemeMap:
    """
    Parse and validate mapping text.

    Raises:
        ParseError: Malformed line, unknown class or duplicate phoneme
        IncompleteMapError: Inventory phoneme missing, or a record with an empty field
        ContradictsReferenceTableError: A reference-table phoneme mapped elsewhere
    """
    entries: Dict[str, PhonemeClasses] = {}
    dims = (Dimension.MANNER, Dimension.PLACE, Dimension.VOICING)

    for line_number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        fields = body.split("\t")
        if len(fields) != 4:
            raise ParseError(
                f"Expected 4 tab-separated fields, got {len(fields)}",
                path=source,
                line_number=line_number,
            )
        raw_symbol = fields[0].strip()
        if not raw_symbol.isalpha() or not raw_symbol.isupper():
            raise ParseError(f"Invalid phoneme symbol {raw_symbol!r}", path=source, line_number=line_number)
        symbol = normalize_symbol(raw_symbol)
        if symbol in entries:
            raise ParseError(f"Duplicate phoneme {symbol}", path=source, line_number=line_number)

        missing = [dim.value for dim, raw in zip(dims, fields[1:]) if not raw.strip()]
        if missing:
            raise IncompleteMapError(
                f"Phoneme {symbol} has no class for {', '.join(missing)}",
                details={"phoneme": symbol, "dimensions": missing, "path": source, "line": line_number},
            )

        manner, place, voicing = (
            _parse_class(dim, raw.strip(), source, line_number) for dim, raw in zip(dims, fields[1:])
        )
        entries[symbol] = PhonemeClasses(manner=manner, place=place, voicing=voicing)

    absent = [p for p in ARPABET_INVENTORY if p not in entries]
    if absent:
        raise IncompleteMapError(
            f"Inventory phonemes missing from map: {', '.join(absent)}",
            details={"missing": absent, "path": source},
        )

    silence = PhonemeClasses(manner=_SILENCE, place=_SILENCE, voicing=_SILENCE)
    if entries.setdefault(SIL, silence) != silence:
        raise ContradictsReferenceTableError(
            "SIL must map to Silence in every dimension",
            details={"phoneme": SIL, "path": source},
        )

    for (symbol, dim), expected in REFERENCE_TABLE.items():
        actual = entries[symbol].name_for(dim)
        if actual != expected:
            raise ContradictsReferenceTableError(
                f"{symbol} is {expected} in {dim.value}, map says {actual or EXCLUDED}",
                details={"phoneme": symbol, "dimension": dim.value, "expected": expected, "actual": actual},
            )

    return PhonemeMap(entries)


def load_phoneme_map(path: Union[str, Path]) -> PhonemeMap:
    """
    Load a mapping file and validate it.

    Args:
        path: Mapping file in the documented TSV grammar

    Returns:
        Validated PhonemeMap

    Raises:
        CorpusIOError: If the file cannot be read
        ParseError, IncompleteMapError, ContradictsReferenceTableError: see parse_phoneme_map
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CorpusIOError(f"Cannot read phoneme map {path}", details={"error": str(e)}) from e

    phoneme_map = parse_phoneme_map(text, source=str(path))
    logger.debug("phoneme_map_loaded", path=str(path), phonemes=len(phoneme_map))
    return phoneme_map


@lru_cache(maxsize=1)
def default_phoneme_map() -> PhonemeMap:
    """The shipped ARPABET mapping."""
    text = (
        resources.files("artiphon.platform.phonology")
        .joinpath("data/arpabet_classes.tsv")
        .read_text(encoding="utf-8")
    )
    return parse_phoneme_map(text, source="arpabet_classes.tsv")
