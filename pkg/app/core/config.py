# core/config.py
import os
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Execution
    THREADS: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    LOG_LEVEL: str = "INFO"
    EVENT_BUDGET: float = 5e7

    # Statistical conventions shared by every diagnostic
    Z_MULTIPLIER: float = 3.0
    KS_ALPHA: float = 0.01
    FAMILY_WISE: bool = True

    # Law distance
    BOOTSTRAP_REPLICATES: int = Field(default=64, ge=2)
    BOOTSTRAP_SEED: int = 20240607
    DICTIONARY_SIZE: int = Field(default=64, ge=1, le=216)

    # Application configuration
    PROJECT_NAME: str = "Enskog Process Simulator"
    VERSION: str = "0.1.0"
    DEFAULT_OUT_DIR: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="ENSKOG_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
