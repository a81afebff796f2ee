"""
SBAS Lab Configuration
Centralized configuration management with validation
"""

import os
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Fixed default seed so casual runs are reproducible.
DEFAULT_SEED = 47065


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")
    log_to_file: bool = Field(default=False, alias="LOG_TO_FILE")
    log_dir: str = Field(default="logs", alias="LOG_DIR")

    # Simulation
    seed: int = Field(default=DEFAULT_SEED, alias="SBAS_SEED")
    jobs: Optional[int] = Field(default=None, alias="SBAS_JOBS")
    trials: int = Field(default=1, ge=1, alias="SBAS_TRIALS")
    tiebreak: str = Field(default="random", alias="SBAS_TIEBREAK")
    attacker_sample: int = Field(default=100, ge=1, alias="SBAS_ATTACKER_SAMPLE")
    no_route_is_resilient: bool = Field(default=True, alias="SBAS_NO_ROUTE_IS_RESILIENT")

    # Placement
    placement_budget: int = Field(default=20000, ge=1, alias="SBAS_PLACEMENT_BUDGET")
    disjoint_samples: bool = Field(default=True, alias="SBAS_DISJOINT_SAMPLES")

    # PoP engine / latency model
    pop_delay_ms: float = Field(default=0.83, ge=0.0, alias="SBAS_POP_DELAY_MS")
    hijack_guard_window_s: float = Field(default=60.0, ge=0.0, alias="SBAS_HIJACK_GUARD_WINDOW_S")

    @property
    def effective_jobs(self) -> int:
        """Worker count, falling back to the available parallelism."""
        if self.jobs and self.jobs > 0:
            return self.jobs
        return os.cpu_count() or 1


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get application settings."""
    return settings
