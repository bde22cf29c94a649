"""
Logging setup shared by the CLI and the HTTP service.
"""

import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {name}:{line} - {message}"


def setup_logging(level: str = "WARNING", log_file: Optional[Union[str, Path]] = None) -> None:
    """Replace loguru's default sink with a stderr sink and an optional rotating file"""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT, colorize=None)
    if log_file:
        logger.add(str(log_file), level="DEBUG", rotation="10 MB", retention=3, encoding="utf-8")
