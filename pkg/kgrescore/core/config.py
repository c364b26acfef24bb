from pathlib import Path
from typing import Literal
from pydantic_settings import BaseSettings, SettingsConfigDict


env_path = Path(__file__).parent.parent.parent / ".envs" / ".env.development"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=env_path,
        env_file_encoding="utf-8",
        env_prefix="KGRESCORE_",
        env_ignore_empty=True,
        extra="ignore",
    )

    ENVIRONMENT: Literal["development", "staging", "production"] = "development"

    PROJECT_NAME: str = "kgrescore"
    LOG_LEVEL: Literal["TRACE", "DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    LOG_DIR: Path | None = None

    # Remote molecule fetch and annotation responses land here
    CACHE_DIR: Path = Path(".kgrescore_cache")
    OFFLINE: bool = False

    HTTP_TIMEOUT: float = 30.0
    HTTP_MAX_RETRIES: int = 3
    HTTP_RETRY_DELAY: float = 1.0
    USER_AGENT: str = "kgrescore/0.1"


settings = Settings()
