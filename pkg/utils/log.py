import sys
from typing import Optional

from loguru import logger

from utils.settings import runtime_settings


def configure_logging(level: Optional[str] = None) -> None:
    """Route loguru output to stderr at the requested level (defaults to SPOTMATCH_LOG_LEVEL)."""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or runtime_settings.log_level).upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {name}:{line} - {message}",
    )
