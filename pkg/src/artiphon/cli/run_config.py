"""
Run configuration: every component config in one validated object.

Sources, highest precedence first:

1. command-line flags (passed to ``RunConfig.load`` as overrides)
2. environment variables, ``ACC_`` prefix, ``__`` between nesting levels
   (``ACC_TRAIN__EPOCHS=3``)
3. a TOML config file
4. defaults

Config file grammar: TOML with top-level run scalars and one table per
component::

    seed = 7

    [synth]
    n_speakers = 10

    [mode]
    mode = "contrast"
    dimension = "voicing"

    [train]
    epochs = 5

Unknown keys anywhere are rejected.
"""

import hashlib
import json
from contextvars import ContextVar
from pathlib import Path
from typing import Any, Optional, Tuple, Type, Union

from pydantic import Field, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from artiphon.core.exceptions import ConfigurationError
from artiphon.features.alignment import AlignmentConfig
from artiphon.features.corpus import SynthSpec
from artiphon.features.encoders import AudioConfig, VitConfig
from artiphon.features.model import ModeConfig
from artiphon.features.training import TrainConfig
from artiphon.platform.phonology import PhonemeMap, default_phoneme_map

_CONFIG_FILE: ContextVar[Optional[Path]] = ContextVar("artiphon_config_file", default=None)


class RunConfig(BaseSettings):
    """All settings of one run."""

    model_config = SettingsConfigDict(
        env_prefix="ACC_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="forbid",
    )

    seed: Optional[int] = Field(default=None, ge=0, description="Overrides synth and train seeds when set")
    out_dir: Path = Field(default=Path("runs"), description="Where commands write their outputs")

    synth: SynthSpec = Field(default_factory=SynthSpec)
    alignment: AlignmentConfig = Field(default_factory=AlignmentConfig)
    vit: VitConfig = Field(default_factory=VitConfig)
    audio: AudioConfig = Field(default_factory=AudioConfig)
    mode: ModeConfig = Field(default_factory=ModeConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        sources = [init_settings, env_settings]
        config_file = _CONFIG_FILE.get()
        if config_file is not None:
            sources.append(TomlConfigSettingsSource(settings_cls, toml_file=config_file))
        return tuple(sources)

    @model_validator(mode="after")
    def reconcile(self) -> "RunConfig":
        if self.seed is not None:
            self.synth = self.synth.model_copy(update={"seed": self.seed})
            self.train = self.train.model_copy(update={"seed": self.seed})
        if self.alignment.image_size is None:
            self.alignment = self.alignment.model_copy(update={"image_size": self.vit.image_size})
        elif self.alignment.image_size != self.vit.image_size:
            raise ValueError(
                f"alignment.image_size ({self.alignment.image_size}) must equal vit.image_size ({self.vit.image_size})"
            )
        return self

    @classmethod
    def load(cls, config_file: Optional[Union[str, Path]] = None, **overrides: Any) -> "RunConfig":
        """
        Resolve a run config from flags, environment, file and defaults.

        Args:
            config_file: Optional TOML file
            **overrides: Flag values, nested as dicts (``train={"epochs": 3}``)

        Raises:
            ConfigurationError: The config file does not exist
            pydantic.ValidationError: A value fails validation or a key is unknown
        """
        path = None
        if config_file is not None:
            path = Path(config_file)
            if not path.is_file():
                raise ConfigurationError(f"Config file {path} does not exist")
        token = _CONFIG_FILE.set(path)
        try:
            return cls(**overrides)
        finally:
            _CONFIG_FILE.reset(token)

    def canonical(self) -> dict:
        """Serializable view without filesystem paths."""
        payload = self.model_dump(mode="json", exclude={"out_dir"})
        payload["alignment"].pop("cache_dir", None)
        return payload

    def config_hash(self, phoneme_map: Optional[PhonemeMap] = None) -> str:
        """
        SHA-256 of the canonical JSON (sorted keys, no whitespace).

        The phoneme map digest is hashed with the configs; None stands for
        the shipped map.
        """
        payload = self.canonical()
        payload["phoneme_map"] = (phoneme_map if phoneme_map is not None else default_phoneme_map()).digest()
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()
