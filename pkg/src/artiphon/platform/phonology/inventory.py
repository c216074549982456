"""
Articulatory dimensions and their class inventories.

Each dimension has a fixed, ordered class list with Silence at index 0.
"""

import enum
import re
from functools import lru_cache
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict

SIL = "SIL"
EXCLUDED = "EXCLUDED"

# Labels that corpora use for non-speech; all collapse to SIL.
NON_SPEECH_LABELS = frozenset({"", "SIL", "SP", "SPN", "PAU", "<SIL>", "SILENCE"})

ARPABET_INVENTORY: Tuple[str, ...] = (
    # vowels
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY",
    "IH", "IY", "OW", "OY", "UH", "UW",
    # consonants
    "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N", "NG",
    "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
)  # fmt: skip

_STRESS = re.compile(r"[0-2]$")


class Dimension(str, enum.Enum):
    """Articulatory dimensions."""

    MANNER = "manner"
    PLACE = "place"
    VOICING = "voicing"


_CLASS_NAMES: Dict[Dimension, Tuple[str, ...]] = {
    Dimension.MANNER: ("Silence", "Stop", "Nasal", "Fricative", "Approximant", "Vowel"),
    Dimension.PLACE: (
        "Silence",
        "Labial",
        "Dental",
        "Alveolar",
        "Postalveolar",
        "Palatal",
        "Velar",
        "Glottal",
    ),
    Dimension.VOICING: ("Silence", "Voiceless", "Voiced"),
}


class PhonologicalClass(BaseModel):
    """One class of one dimension, e.g. (manner, Stop, 1)."""

    model_config = ConfigDict(frozen=True)

    dimension: Dimension
    name: str
    index: int

    def __str__(self) -> str:
        return self.name


@lru_cache(maxsize=None)
def _classes(dim: Dimension) -> Tuple[PhonologicalClass, ...]:
    return tuple(
        PhonologicalClass(dimension=dim, name=name, index=i)
        for i, name in enumerate(_CLASS_NAMES[dim])
    )


def classes(dim: Dimension) -> List[PhonologicalClass]:
    """
    Ordered class list of a dimension, Silence first.

    Example:
        >>> [c.name for c in classes(Dimension.VOICING)]
        ['Silence', 'Voiceless', 'Voiced']
    """
    return list(_classes(Dimension(dim)))


def class_names(dim: Dimension) -> List[str]:
    """Class names of a dimension in index order."""
    return list(_CLASS_NAMES[Dimension(dim)])


def n_classes(dim: Dimension) -> int:
    """Number of classes in a dimension (6, 8 or 3)."""
    return len(_CLASS_NAMES[Dimension(dim)])


def class_by_name(dim: Dimension, name: str) -> PhonologicalClass:
    """
    Look up a class by name, case-insensitively.

    Raises:
        KeyError: If the dimension has no such class
    """
    wanted = name.strip().lower()
    for cls in _classes(Dimension(dim)):
        if cls.name.lower() == wanted:
            return cls
    raise KeyError(f"{dim.value} has no class named {name!r}")


def class_index(dim: Dimension, name: str) -> int:
    """Ordinal of a class within its dimension."""
    return class_by_name(dim, name).index


def normalize_symbol(raw: str) -> str:
    """
    Canonical phoneme symbol: upper-cased, stress digit stripped,
    non-speech labels collapsed to SIL.

    Example:
        >>> normalize_symbol("aa1")
        'AA'
        >>> normalize_symbol("sp")
        'SIL'
    """
    symbol = raw.strip().upper()
    if symbol in NON_SPEECH_LABELS:
        return SIL
    return _STRESS.sub("", symbol)
