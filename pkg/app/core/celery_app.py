from celery import Celery
from celery.signals import setup_logging
import logging
import logging.config
from app.core.config import settings
from app.core.logging_config import get_logging_config

logger = logging.getLogger(__name__)

# Create Celery instance
celery_app = Celery(
    "symspace_tasks",
    broker=settings.CELERY_BROKER_URL,
    backend=settings.CELERY_RESULT_BACKEND,
    include=["app.tasks.verification"]
)

# Configure Celery
celery_app.conf.task_routes = {
    "app.tasks.verification.*": {"queue": "verification"},
}

celery_app.conf.update(
    task_always_eager=settings.CELERY_TASK_ALWAYS_EAGER,
    task_eager_propagates=True,
    task_track_started=True,
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,
    broker_connection_retry_on_startup=True,
    worker_prefetch_multiplier=1,
    task_acks_late=True,
    task_reject_on_worker_lost=True,
)


@setup_logging.connect
def configure_worker_logging(**kwargs) -> None:
    """Workers log to stderr with the same format as the CLI"""
    logging.config.dictConfig(get_logging_config(settings.LOG_LEVEL))


logger.debug(f"Celery app configured (always_eager={settings.CELERY_TASK_ALWAYS_EAGER})")
