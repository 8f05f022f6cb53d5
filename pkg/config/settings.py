# config/settings.py
from functools import lru_cache

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    # Application settings
    APP_NAME: str = "deautoconv"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "results"

    # Iteration control
    MAX_ITERATIONS: int = 2000
    STOP_TOLERANCE: float = 1e-12
    STOP_WINDOW: int = 10

    # Diagnostic tolerances (relative to sum(y) unless noted)
    TOL_MASS: float = 1e-10
    TOL_ID: float = 1e-8
    TOL_GAIN: float = 1e-12
    TOL_KKT: float = 1e-8
    THETA_ZERO: float = 1e-10  # relative to max(x)

    # Random initialisation, as a multiple of sqrt(sum(y)) / (n + 1)
    INIT_LOW: float = 0.5
    INIT_HIGH: float = 1.5

    # Execution
    PROGRESS_EVERY: int = 0  # 0 disables progress lines
    WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_prefix="DEAUTOCONV_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
