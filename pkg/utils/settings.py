from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class RuntimeSettings(BaseSettings):
    """Process settings that are set using environment variables (prefix SPOTMATCH_)."""

    model_config = SettingsConfigDict(env_prefix="SPOTMATCH_")

    # One of loguru's level names
    log_level: str = "INFO"

    # Default directory for generated datasets, checkpoints and reports
    output_dir: Path = Path("runs")

    # Experiment arms run in parallel processes when > 1
    max_workers: int = Field(1, ge=1)

    @field_validator("log_level", mode="before")
    def normalize_log_level(cls, log_level):
        return str(log_level).upper()


# Create RuntimeSettings object
runtime_settings = RuntimeSettings()
