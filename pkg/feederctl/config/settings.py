"""Runtime settings using Pydantic Settings."""

import logging
import os
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Numerical and logging knobs loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="FEEDERCTL_",
        env_file=(".env", f".env.{os.getenv('FEEDERCTL_ENV', 'development')}"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Environment
    env: str = "development"  # development, ci
    log_level: str = "INFO"

    # Power flow
    power_flow_tolerance_pu: float = 1e-10
    power_flow_max_iterations: int = 100
    power_flow_max_residual_pu: float = 1e-6

    # Linearization
    linearization_epsilon: float = 1000.0  # W and var
    power_base_va: float = 1e6

    # Output
    output_dir: str = "output"
    csv_float_format: str = "%.10g"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    settings = Settings()

    # Log all settings on first load
    logger.info("=" * 50)
    logger.info("CONFIGURATION LOADED")
    logger.info("=" * 50)
    logger.info(f"FEEDERCTL_ENV: {settings.env}")
    logger.info(f"LOG_LEVEL: {settings.log_level}")
    logger.info(f"POWER_FLOW_TOLERANCE_PU: {settings.power_flow_tolerance_pu}")
    logger.info(f"POWER_FLOW_MAX_ITERATIONS: {settings.power_flow_max_iterations}")
    logger.info(f"POWER_FLOW_MAX_RESIDUAL_PU: {settings.power_flow_max_residual_pu}")
    logger.info(f"LINEARIZATION_EPSILON: {settings.linearization_epsilon}")
    logger.info(f"POWER_BASE_VA: {settings.power_base_va}")
    logger.info(f"OUTPUT_DIR: {settings.output_dir}")
    logger.info("=" * 50)

    return settings
