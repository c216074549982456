"""
Configuration management for Artiphon.

This module provides the process-wide ambient settings using Pydantic
Settings. Run-level configuration (model, training, corpus) lives in
``artiphon.cli.run_config`` and is composed from the component configs.
"""

from functools import lru_cache
from typing import Any, Dict

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Ambient settings loaded from environment variables.

    All settings can be overridden via ``ACC_``-prefixed environment variables.
    Example: ACC_THREADS=4 artiphon synth --out corpus/
    """

    model_config = SettingsConfigDict(
        env_prefix="ACC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Settings
    app_name: str = Field(default="Artiphon", description="Application name")
    app_version: str = Field(default="0.1.0", description="Application version")
    app_env: str = Field(default="development", description="Environment: development, staging, production")
    log_level: str = Field(default="INFO", description="Logging level")
    json_logs: bool = Field(default=False, description="Render logs as JSON")

    # Execution
    threads: int = Field(default=1, ge=1, description="Worker cap for generation and example building")

    # Numerics
    debug_numerics: bool = Field(default=False, description="Check every forward op for NaN/Inf")
    precision: str = Field(default="float64", description="Tensor precision: float64 or float32")

    @field_validator("app_env")
    @classmethod
    def validate_app_env(cls, v: str) -> str:
        """Validate application environment."""
        allowed = ["development", "staging", "production"]
        if v not in allowed:
            raise ValueError(f"app_env must be one of {allowed}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in allowed:
            raise ValueError(f"log_level must be one of {allowed}")
        return v_upper

    @field_validator("precision")
    @classmethod
    def validate_precision(cls, v: str) -> str:
        """Validate tensor precision."""
        allowed = ["float64", "float32"]
        if v.lower() not in allowed:
            raise ValueError(f"precision must be one of {allowed}")
        return v.lower()

    @property
    def is_production(self) -> bool:
        """Check if running in production mode."""
        return self.app_env == "production"

    def summary(self) -> Dict[str, Any]:
        """Settings as a plain dict for the run banner."""
        return self.model_dump()


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Returns:
        Settings instance

    Note:
        In tests, clear the cache with get_settings.cache_clear()
    """
    return Settings()


# Export singleton instance
settings = get_settings()
