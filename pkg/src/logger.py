import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from config import Config


def setup_logger(name='pseudolap', log_level=None):
    """Setup logger with console and file handlers with rotation"""

    if log_level is None:
        log_level = getattr(logging, str(Config.LOG_LEVEL).upper(), logging.WARNING)

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # Check if handlers specific to this logger are already added to avoid duplication
    if not logger.handlers:

        # Formatter
        formatter = logging.Formatter(
            '[%(asctime)s] - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        # File Handler (10MB max, 5 backups); empty path disables it
        if Config.LOG_FILE:
            log_dir = os.path.dirname(Config.LOG_FILE)
            if log_dir and not os.path.exists(log_dir):
                os.makedirs(log_dir)
            file_handler = RotatingFileHandler(
                Config.LOG_FILE,
                maxBytes=10*1024*1024,
                backupCount=5
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        # Console Handler; stdout carries results
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger
