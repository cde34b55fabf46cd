"""Process-level settings read from the environment (RGN_ prefix)."""
from functools import lru_cache
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Environment-driven knobs that are not part of a model or training config."""

    model_config = SettingsConfigDict(env_prefix="RGN_", env_file=".env", extra="ignore")

    dtype: Literal["float64", "float32"] = Field(
        "float64", description="Floating point precision of every tensor"
    )
    log_level: str = Field("INFO", description="Root log level for the CLI")
    output_dir: str = Field("runs", description="Default output directory")
    mlflow_tracking_uri: Optional[str] = Field(
        None, description="When set, training runs are also logged to MLflow"
    )
    mlflow_experiment: str = Field("reasoning_graphs", description="MLflow experiment name")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get or create the Settings singleton."""
    return Settings()
