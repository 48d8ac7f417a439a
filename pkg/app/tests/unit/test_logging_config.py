import logging
import sys

from app.core.celery_app import configure_worker_logging
from app.core.logging_config import configure_logging, get_logging_config


class TestLoggingConfig:
    def setup_method(self):
        self.root = logging.getLogger()
        self.original_handlers = self.root.handlers[:]
        self.original_level = self.root.level

    def teardown_method(self):
        for handler in self.root.handlers[:]:
            self.root.removeHandler(handler)
        for handler in self.original_handlers:
            self.root.addHandler(handler)
        self.root.setLevel(self.original_level)

    def test_configure_logging_writes_to_stderr(self):
        """stdout is reserved for reports"""
        configure_logging("debug")
        assert self.root.level == logging.DEBUG
        assert len(self.root.handlers) == 1
        assert self.root.handlers[0].stream is sys.stderr

    def test_celery_stays_quiet_at_info(self):
        configure_logging("INFO")
        assert logging.getLogger("celery").level == logging.WARNING

    def test_dict_config_levels(self):
        config = get_logging_config("WARNING")
        assert config["handlers"]["console"]["stream"] == "ext://sys.stderr"
        assert config["loggers"]["app.geometry"]["level"] == "WARNING"

    def test_worker_logging_signal(self):
        configure_worker_logging()
        assert any(isinstance(h, logging.StreamHandler) for h in self.root.handlers)
