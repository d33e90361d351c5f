"""
Structured logging configuration with rotation and JSON formatting
"""

import logging
import os
import sys
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from typing import Any, Optional

from pythonjsonlogger import jsonlogger

from cmcindex.config import settings

# Extra record attributes surfaced by both formatters
CONTEXT_FIELDS = ("stage", "run_id", "iteration", "residual", "duration_ms", "grid")


class JSONFormatter(jsonlogger.JsonFormatter):
    """JSON formatter with a fixed envelope for structured logging"""

    def add_fields(self, log_record: dict, record: logging.LogRecord, message_dict: dict) -> None:
        super().add_fields(log_record, record, message_dict)
        log_record["timestamp"] = datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")
        log_record["level"] = record.levelname
        log_record["logger"] = record.name
        for key in CONTEXT_FIELDS:
            if hasattr(record, key):
                log_record[key] = getattr(record, key)


class ConsoleFormatter(logging.Formatter):
    """Colored console formatter for development"""

    COLORS = {
        "DEBUG": "\033[36m",     # Cyan
        "INFO": "\033[32m",      # Green
        "WARNING": "\033[33m",   # Yellow
        "ERROR": "\033[31m",     # Red
        "CRITICAL": "\033[35m",  # Magenta
    }
    RESET = "\033[0m"

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname, self.RESET)
        timestamp = datetime.now().strftime("%H:%M:%S")

        message = f"{color}[{timestamp}] {record.levelname:8}{self.RESET} | {record.name} | {record.getMessage()}"

        extras = [f"{key}={getattr(record, key)}" for key in CONTEXT_FIELDS if hasattr(record, key)]
        if extras:
            message += f" | {' '.join(extras)}"

        if record.exc_info:
            message += f"\n{self.formatException(record.exc_info)}"

        return message


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    debug: Optional[bool] = None
) -> None:
    """
    Setup logging with a stderr handler and optional rotating file handlers

    Args:
        level: Overrides settings.log_level
        log_file: Overrides settings.log_file; empty string disables file logging
        debug: Overrides settings.debug (colored console output)
    """
    level = (level or settings.log_level).upper()
    debug = settings.debug if debug is None else debug
    log_file = settings.log_file if log_file is None else log_file

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level, logging.INFO))
    root_logger.handlers.clear()

    # stdout carries command output, so logs go to stderr
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.DEBUG)
    if debug:
        console_handler.setFormatter(ConsoleFormatter())
    else:
        console_handler.setFormatter(JSONFormatter("%(message)s"))
    root_logger.addHandler(console_handler)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=settings.log_max_bytes,
            backupCount=settings.log_backup_count,
            encoding="utf-8"
        )
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(JSONFormatter("%(message)s"))
        root_logger.addHandler(file_handler)

        # Error file handler (separate file for errors)
        error_handler = RotatingFileHandler(
            log_file.replace(".log", ".error.log"),
            maxBytes=settings.log_max_bytes,
            backupCount=settings.log_backup_count,
            encoding="utf-8"
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(JSONFormatter("%(message)s"))
        root_logger.addHandler(error_handler)

    # numpy / scipy warnings go through the same handlers
    logging.captureWarnings(True)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the given name"""
    return logging.getLogger(name)


class LoggerAdapter(logging.LoggerAdapter):
    """Logger adapter for adding context to log messages"""

    def process(self, msg: str, kwargs: dict) -> tuple[str, dict]:
        extra = kwargs.get("extra", {})
        extra.update(self.extra)
        kwargs["extra"] = extra
        return msg, kwargs


def get_context_logger(name: str, **context: Any) -> LoggerAdapter:
    """Get a logger with context (stage, run_id, etc.)"""
    return LoggerAdapter(get_logger(name), context)
