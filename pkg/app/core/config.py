from typing import List, Literal
import logging
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Set up logger
logger = logging.getLogger(__name__)

PACKAGE_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=True
    )

    PROJECT_NAME: str = "symspace"

    # Randomness and arithmetic
    DEFAULT_SEED: int = 0
    SCALAR_MODE: Literal["exact", "float"] = "exact"
    FLOAT_TOLERANCE: float = 1e-9

    # Sampling used for set-equality and pencil checks
    GRID_RADIUS: int = 2
    GRID_CAP: int = 10_000
    RANDOM_GRID_POINTS: int = 50
    PENCIL_GRID_RADIUS: int = 3
    PENCIL_RANDOM_PAIRS: int = 20

    # Iteration limits
    SURFACE_SOLVE_MAX_ITERATIONS: int = 16
    SAMPLER_MAX_ATTEMPTS: int = 40

    # Batch dispatch
    CHUNK_SIZE: int = 50

    LOG_LEVEL: str = "INFO"

    # Bundled JSON inputs
    DATA_DIR: Path = PACKAGE_ROOT / "data"

    # Celery and Redis settings
    CELERY_BROKER_URL: str = "redis://localhost:6379/0"
    CELERY_RESULT_BACKEND: str = "redis://localhost:6379/0"
    CELERY_TASK_ALWAYS_EAGER: bool = True

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalise_log_level(cls, v: str) -> str:
        level = str(v).upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level: {v}")
        return level

    def bundled_names(self) -> List[str]:
        """Names of the bundled inputs, without the .json suffix"""
        return sorted(path.stem for path in Path(self.DATA_DIR).glob("*.json"))

    def bundled_file(self, name: str) -> Path:
        """Resolve a bundled input by name (with or without .json)"""
        stem = name[:-5] if name.endswith(".json") else name
        path = Path(self.DATA_DIR) / f"{stem}.json"
        if not path.exists():
            raise FileNotFoundError(f"No bundled input named {name!r}; available: {', '.join(self.bundled_names())}")
        return path

    def grid_axis(self) -> List[int]:
        """Integer axis -GRID_RADIUS..GRID_RADIUS of the sampling grid"""
        return list(range(-self.GRID_RADIUS, self.GRID_RADIUS + 1))


settings = Settings()
