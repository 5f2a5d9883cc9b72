import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv(verbose=False)


def sanitize_env_value(value: str) -> str:
    """Remove quotes, carriage returns, and whitespace from environment variable values."""
    if not value:
        return ""
    return value.strip().strip('"').strip("'").replace('\r', '').replace('\n', '').strip()


def _env(key: str, default: str) -> str:
    value = sanitize_env_value(os.getenv(key, ""))
    return value or default


class Settings(BaseModel):
    """Process settings. Only logging and the HTTP server read these; numerics never do."""
    log_level: str = Field(default="INFO")
    log_dir: str = Field(default="logs")
    log_to_file: bool = Field(default=False)
    api_host: str = Field(default="0.0.0.0")
    api_port: int = Field(default=8080, gt=0, lt=65536)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings(
        log_level=_env("LOG_LEVEL", "INFO").upper(),
        log_dir=_env("LOG_DIR", "logs"),
        log_to_file=_env("LOG_TO_FILE", "false").lower() in {"1", "true", "yes", "on"},
        api_host=_env("API_HOST", "0.0.0.0"),
        api_port=int(_env("API_PORT", "8080")),
    )
