"""Shared fixtures: a tiny synthetic corpus and desk-scale model configs."""

from fractions import Fraction
from importlib import resources

import numpy as np
import pytest

from artiphon.features.alignment import AlignmentConfig
from artiphon.features.corpus import SynthSpec, synthesize_corpus
from artiphon.features.encoders import AudioConfig, ConvLayer, VitConfig
from artiphon.platform.phonology import REFERENCE_TABLE, Dimension, parse_phoneme_map

TINY_IMAGE = 16


@pytest.fixture(scope="session")
def tiny_spec() -> SynthSpec:
    """Four speakers, two sentences each, 16-pixel frames."""
    return SynthSpec(
        n_speakers=4,
        sentences_per_speaker=2,
        phones_per_sentence=6,
        image_size=TINY_IMAGE,
        seed=3,
    )


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory, tiny_spec):
    """Manifest of the tiny corpus, generated once per session."""
    return synthesize_corpus(tiny_spec, tmp_path_factory.mktemp("corpus"))


@pytest.fixture
def alignment_config() -> AlignmentConfig:
    return AlignmentConfig(fps=Fraction(15), sample_rate=16000, image_size=TINY_IMAGE)


@pytest.fixture
def vit_config() -> VitConfig:
    return VitConfig(
        image_size=TINY_IMAGE, patch_size=8, embed_dim=16, depth=1, heads=2, mlp_dim=32, dropout=0.0
    )


@pytest.fixture
def audio_config() -> AudioConfig:
    return AudioConfig(
        conv_layers=[ConvLayer(channels=8, kernel=10, stride=5), ConvLayer(channels=8, kernel=8, stride=4)],
        depth=1,
        heads=2,
        hidden_dim=16,
        mlp_dim=32,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def devoiced_map():
    """Shipped map with every editable Voiced row switched to Voiceless."""
    text = (
        resources.files("artiphon.platform.phonology")
        .joinpath("data/arpabet_classes.tsv")
        .read_text(encoding="utf-8")
    )
    lines = []
    for line in text.splitlines():
        fields = line.split("\t")
        if (
            len(fields) >= 4
            and not line.startswith("#")
            and fields[3].strip() == "Voiced"
            and (fields[0], Dimension.VOICING) not in REFERENCE_TABLE
        ):
            fields[3] = "Voiceless"
        lines.append("\t".join(fields))
    return parse_phoneme_map("\n".join(lines), source="devoiced")
