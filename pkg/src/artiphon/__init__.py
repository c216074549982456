"""
Artiphon: frame-level articulatory-phonology classification.

Classifies manner, place and voicing for every frame of a vocal-tract video,
optionally helped by the synchronized speech signal.
"""

__version__ = "0.1.0"
