"""Runtime settings read from the environment and an optional .env file."""

import os
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigError

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class Settings(BaseModel):
    """Defaults the CLI falls back to when a flag is not given."""

    seed: int = Field(0, ge=0, description="Default random seed (MARGINBV_SEED)")
    log_level: LogLevel = Field("INFO", description="Console log level (MARGINBV_LOG_LEVEL)")
    n_jobs: int = Field(1, ge=1, description="Parallel bootstrap jobs (MARGINBV_N_JOBS)")
    log_dir: str = Field("logs", description="Directory for log files (MARGINBV_LOG_DIR)")

    @field_validator("log_level", mode="before")
    @classmethod
    def _upper(cls, value):
        return value.strip().upper() if isinstance(value, str) else value

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Read ``MARGINBV_*`` variables after loading ``.env``.

        Raises:
            ConfigError: a variable is set to an invalid value
        """
        load_dotenv()
        values = {
            "seed": os.getenv("MARGINBV_SEED"),
            "log_level": os.getenv("MARGINBV_LOG_LEVEL"),
            "n_jobs": os.getenv("MARGINBV_N_JOBS"),
            "log_dir": os.getenv("MARGINBV_LOG_DIR"),
        }
        try:
            return cls(**{key: value for key, value in values.items() if value not in (None, "")})
        except ValidationError as exc:
            raise ConfigError(f"invalid MARGINBV_* environment setting: {exc}") from exc
