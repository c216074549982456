"""
Phonology: articulatory dimensions, class inventories and the
phoneme -> class mapping.
"""

from artiphon.platform.phonology.inventory import (
    ARPABET_INVENTORY,
    EXCLUDED,
    SIL,
    Dimension,
    PhonologicalClass,
    class_by_name,
    class_index,
    class_names,
    classes,
    n_classes,
    normalize_symbol,
)
from artiphon.platform.phonology.phoneme_map import (
    REFERENCE_TABLE,
    PhonemeClasses,
    PhonemeMap,
    default_phoneme_map,
    load_phoneme_map,
    parse_phoneme_map,
)

__all__ = [
    "ARPABET_INVENTORY",
    "EXCLUDED",
    "SIL",
    "Dimension",
    "PhonologicalClass",
    "class_by_name",
    "class_index",
    "class_names",
    "classes",
    "n_classes",
    "normalize_symbol",
    "REFERENCE_TABLE",
    "PhonemeClasses",
    "PhonemeMap",
    "default_phoneme_map",
    "load_phoneme_map",
    "parse_phoneme_map",
]
