"""
Logging utilities for the Hamiltonian descent toolkit.
Provides structured logging with different levels and formatters.
"""

import functools
import logging
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Optional

from config import get_logging_config


ROOT_LOGGER_NAME = "hamdesc"


class ColoredFormatter(logging.Formatter):
    """Custom formatter that adds colors to log levels for console output."""

    # ANSI color codes
    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
        'RESET': '\033[0m'        # Reset
    }

    def format(self, record):
        message = super().format(record)

        if hasattr(sys.stderr, 'isatty') and sys.stderr.isatty():
            level_color = self.COLORS.get(record.levelname, '')
            reset_color = self.COLORS['RESET']
            return f"{level_color}{message}{reset_color}"

        return message


class HamDescLogger:
    """
    Centralized logging configuration for the toolkit.

    Console output goes to stderr so that JSON printed by the CLI on stdout
    stays machine readable. File handlers are optional.
    """

    _instance = None
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            self._setup_logging()
            HamDescLogger._initialized = True

    def _setup_logging(self):
        """Configure the root logger of the toolkit."""
        settings = get_logging_config()

        self.logger = logging.getLogger(ROOT_LOGGER_NAME)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False
        self.console_handler: Optional[logging.Handler] = None
        self.log_dir: Optional[Path] = None

        # Prevent duplicate handlers
        if self.logger.handlers:
            return

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, settings.CONSOLE_LEVEL.upper(), logging.INFO))
        console_handler.setFormatter(ColoredFormatter(
            fmt='%(asctime)s | %(levelname)-8s | %(name)s | %(message)s',
            datefmt='%H:%M:%S'
        ))
        self.logger.addHandler(console_handler)
        self.console_handler = console_handler

        if settings.FILE_LOGGING:
            self.enable_file_logging(settings.LOG_DIR)

    def enable_file_logging(self, log_dir: str) -> Path:
        """Attach the daily DEBUG log and the WARNING+ error log under log_dir."""
        path = Path(log_dir)
        if self.log_dir == path:
            return path
        path.mkdir(parents=True, exist_ok=True)

        file_format = logging.Formatter(
            fmt='%(asctime)s | %(levelname)-8s | %(name)-22s | %(funcName)-18s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        stamp = datetime.now().strftime('%Y%m%d')

        file_handler = logging.FileHandler(path / f"hamdesc_{stamp}.log", encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(file_format)

        error_handler = logging.FileHandler(path / f"hamdesc_errors_{stamp}.log", encoding='utf-8')
        error_handler.setLevel(logging.WARNING)
        error_handler.setFormatter(file_format)

        self.logger.addHandler(file_handler)
        self.logger.addHandler(error_handler)
        self.log_dir = path
        self.logger.debug(f"File logging enabled in {path}")
        return path

    def get_logger(self, name: str) -> logging.Logger:
        """Get a logger instance for a specific module."""
        return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")

    def set_level(self, level: str):
        """Set the logging level for console output."""
        level_value = logging.getLevelName(level.upper())
        if not isinstance(level_value, int) or self.console_handler is None:
            return
        self.console_handler.setLevel(level_value)
        self.logger.debug(f"Console logging level set to {level.upper()}")


# Global logger instance
_logger_manager = HamDescLogger()


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module.

    Args:
        name: The name of the module (e.g., 'kinetic', 'integrators', 'cli')

    Returns:
        A configured logger instance
    """
    return _logger_manager.get_logger(name)


def set_log_level(level: str):
    """
    Set the console logging level.

    Args:
        level: Log level ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')
    """
    _logger_manager.set_level(level)


def enable_file_logging(log_dir: str) -> Path:
    """Write DEBUG and error logs under log_dir in addition to the console."""
    return _logger_manager.enable_file_logging(log_dir)


def log_performance(func):
    """
    Decorator to log function performance.

    Usage:
        @log_performance
        def execute(self, args):
            ...
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger('performance')
        start_time = time.perf_counter()

        try:
            result = func(*args, **kwargs)
            elapsed = time.perf_counter() - start_time
            logger.debug(f"{func.__qualname__} completed in {elapsed:.4f}s")
            return result
        except Exception as e:
            elapsed = time.perf_counter() - start_time
            logger.debug(f"{func.__qualname__} failed after {elapsed:.4f}s: {e}")
            raise

    return wrapper


def log_run_summary(method: str, iterations: int, final_subopt: Optional[float], elapsed: float):
    """Log the outcome of one integrator run."""
    logger = get_logger('runs')
    subopt = "n/a" if final_subopt is None else f"{final_subopt:.3e}"
    logger.info(f"{method}: {iterations:,} iterations, final suboptimality {subopt} in {elapsed:.3f}s")


def log_config_change(setting: str, old_value, new_value):
    """Log configuration changes."""
    logger = get_logger('config')
    logger.info(f"Config changed: {setting} from {old_value} to {new_value}")
