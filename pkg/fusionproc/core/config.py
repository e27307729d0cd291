from functools import lru_cache

from pydantic import BaseSettings, Field, validator


class Settings(BaseSettings):
    app_name: str = "fusionproc"
    workers: int = Field(
        default=1,
        description="Maximum number of worker processes used by sweeps",
        env="FUSIONPROC_WORKERS",
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level for command output on stderr",
        env="FUSIONPROC_LOG_LEVEL",
    )
    output_dir: str = Field(
        default="results",
        description="Directory that receives sweep CSV files when no path is given",
        env="FUSIONPROC_OUTPUT_DIR",
    )
    default_seed: int = Field(
        default=1,
        description="Seed used when a command is invoked without --seed",
        env="FUSIONPROC_DEFAULT_SEED",
    )
    stream_batch_size: int = Field(
        default=65536,
        description="Candidate pair indices drawn per refill of a lazy edge stream",
        env="FUSIONPROC_STREAM_BATCH_SIZE",
    )
    oracle_limit: int = Field(
        default=10_000_000,
        description="Maximum labelings the exact multiway cut oracle may enumerate",
        env="FUSIONPROC_ORACLE_LIMIT",
    )
    exhaustive_max_n: int = Field(
        default=65536,
        description="Largest vertex count accepted by exhaustive runs",
        env="FUSIONPROC_EXHAUSTIVE_MAX_N",
    )
    run_slow_tests: bool = Field(
        default=False,
        description="Enable the desk-scale statistical acceptance tests",
        env="FUSIONPROC_RUN_SLOW_TESTS",
    )

    class Config:
        env_file = ".env"

    @validator("workers", "stream_batch_size", "oracle_limit", "exhaustive_max_n")
    def _require_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("log_level")
    def _normalize_log_level(cls, value: str) -> str:
        return value.strip().upper() or "INFO"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
