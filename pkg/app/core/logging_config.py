import logging
import sys
from typing import Any, Dict, Optional

# Define log format for consistency
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    """
    Set up logging on the root logger. Output goes to stderr so that stdout
    carries only reports.
    """
    from app.core.config import settings

    level = (level or settings.LOG_LEVEL).upper()
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Remove any existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root_logger.addHandler(console_handler)

    # Geometry modules log per-tuple detail at DEBUG
    geometry_logger = logging.getLogger("app.geometry")
    geometry_logger.setLevel(level)
    geometry_logger.propagate = True

    celery_logger = logging.getLogger("celery")
    celery_logger.setLevel(logging.WARNING if level == "INFO" else level)
    celery_logger.propagate = True


def get_logging_config(level: str = "INFO") -> Dict[str, Any]:
    """
    Get the logging configuration as a dictionary for programmatic use.
    """
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {
                "format": LOG_FORMAT
            }
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": level,
                "formatter": "standard",
                "stream": "ext://sys.stderr"
            }
        },
        "loggers": {
            "": {  # Root logger
                "handlers": ["console"],
                "level": level,
                "propagate": True
            },
            "app.geometry": {
                "level": level,
                "propagate": True
            },
            "app.tasks.verification": {
                "level": level,
                "propagate": True
            },
        }
    }
