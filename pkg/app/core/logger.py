import json
import logging
import math
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Any, Optional

import numpy as np

from app.core.config import get_settings


class StructuredFormatter(logging.Formatter):
    """
    Formatter for structured logging.
    Dict and list messages are rendered as JSON; numpy scalars and arrays inside
    them (or inside the %-args) are converted to plain Python values first.
    """

    def _plain(self, data: Any) -> Any:
        if isinstance(data, dict):
            return {str(k): self._plain(v) for k, v in data.items()}
        if isinstance(data, (list, tuple)):
            return [self._plain(item) for item in data]
        if isinstance(data, np.ndarray):
            return self._plain(data.tolist())
        if isinstance(data, np.generic):
            return self._plain(data.item())
        if isinstance(data, float) and not math.isfinite(data):
            return str(data)
        return data

    def format(self, record: logging.LogRecord) -> str:
        if isinstance(record.msg, (dict, list)):
            try:
                record.msg = json.dumps(self._plain(record.msg), default=str)
            except (TypeError, ValueError):
                record.msg = str(record.msg)

        if record.args:
            if isinstance(record.args, dict):
                record.args = {k: self._scalar(v) for k, v in record.args.items()}
            else:
                record.args = tuple(self._scalar(a) for a in record.args)

        return super().format(record)

    def _scalar(self, value: Any) -> Any:
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, np.ndarray):
            return value.tolist()
        return value


def setup_logger(
    name: str = "peer",
    log_dir: Optional[str] = None,
    log_level: Optional[int] = None,
    to_console: bool = True,
    to_file: Optional[bool] = None,
) -> logging.Logger:
    """
    Sets up a logger with a console handler and an optional rotating file handler.
    Unset arguments fall back to the process settings.
    """
    settings = get_settings()
    log_dir = log_dir if log_dir is not None else settings.log_dir
    to_file = to_file if to_file is not None else settings.log_to_file
    if log_level is None:
        log_level = logging.getLevelName(settings.log_level)
        if not isinstance(log_level, int):
            log_level = logging.INFO

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # Already configured: avoid duplicate handlers
    if logger.hasHandlers():
        return logger

    formatter = StructuredFormatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    if to_file:
        try:
            os.makedirs(log_dir, exist_ok=True)
            file_handler = RotatingFileHandler(
                os.path.join(log_dir, "peer.log"),
                maxBytes=10 * 1024 * 1024,
                backupCount=5,
            )
            file_handler.setFormatter(formatter)
            file_handler.setLevel(log_level)
            logger.addHandler(file_handler)
        except OSError as e:
            sys.stderr.write(f"Failed to setup file logger: {e}\n")

    if to_console:
        # stderr keeps CLI stdout clean for piped CSV
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        console_handler.setLevel(log_level)
        logger.addHandler(console_handler)

    logger.propagate = False
    return logger


logger = setup_logger()


def set_log_level(level: str) -> None:
    """Apply ``level`` to every logger created through setup_logger and to its handlers."""
    for candidate in logging.root.manager.loggerDict.values():
        if isinstance(candidate, logging.Logger) and candidate.handlers and not candidate.propagate:
            candidate.setLevel(level)
            for handler in candidate.handlers:
                handler.setLevel(level)
