"""Runtime settings for RoadNet.

Values come from environment variables prefixed ``ROADNET_`` or from a
``.env`` file in the working directory.
"""

import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class RoadSettings(BaseSettings):
    """Defaults for measurement, experiments and bookkeeping."""

    model_config = SettingsConfigDict(env_prefix="ROADNET_", extra="ignore")

    # Route-length profile discretization
    bin_width: float = 0.25
    d_max: float = 10.0
    inner_margin: float = 0.1
    hammersley_margin: float = 0.2
    min_count: int = 100

    # Experiment harness
    replicates: int = 10
    workers: int = 0  # 0 = all available cores
    gp_max_n: int = 1000
    beta_grid: list[float] = Field(
        default_factory=lambda: [0.8, 0.9, 1.0, 1.1, 1.25, 1.5, 1.75, 2.0]
    )
    convergence_grid: list[int] = Field(default_factory=lambda: [250, 1000, 2500, 10000])
    runs_dir: str = "runs"
    code_version: str = "1.0.0"

    # Audit trail / logging
    audit_enabled: bool = True
    audit_db_path: str = "data/roadnet_audit.db"
    log_level: str = "INFO"

    @field_validator("inner_margin", "hammersley_margin")
    @classmethod
    def _margin_in_range(cls, value: float) -> float:
        if not 0.0 <= value < 0.5:
            raise ValueError("margin must lie in [0, 0.5)")
        return value

    @field_validator("bin_width", "d_max")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    def resolved_workers(self) -> int:
        """Worker count with 0 mapped to the available parallelism."""
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


_settings: Optional[RoadSettings] = None


def get_settings() -> RoadSettings:
    """Get or create the settings singleton."""
    global _settings
    if _settings is None:
        _settings = RoadSettings()
    return _settings


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None
