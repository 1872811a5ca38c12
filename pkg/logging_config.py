"""
Logging setup for the surge staffing planner

One dated log file per command under AppConfig.LOG_DIR at DEBUG, and a terse
console stream at the requested level. Numerical warnings raised by numpy go
through the same handlers.
"""

import logging
import os
from datetime import datetime
from typing import Optional
from config import AppConfig

FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
CONSOLE_FORMAT = '%(levelname)s - %(message)s'


def log_file_path(log_dir: str, run_name: str) -> str:
    """Dated log file for one command, e.g. logs/surge_solve_20261017.log"""
    stamp = datetime.now().strftime('%Y%m%d')
    return os.path.join(log_dir, f"surge_{run_name.replace('-', '_')}_{stamp}.log")


def setup_logging(level=logging.INFO, log_dir: Optional[str] = None, run_name: str = 'planner'):
    """Route every module logger to the console and to the command's log file"""
    log_dir = log_dir or AppConfig.LOG_DIR
    os.makedirs(log_dir, exist_ok=True)

    file_handler = logging.FileHandler(log_file_path(log_dir, run_name), encoding='utf-8')
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
    file_handler.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    console_handler.setLevel(level)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)

    # overflow and divide warnings from the batched simulation
    logging.captureWarnings(True)
    return root_logger


def get_logger(name):
    """Get a logger for a specific module"""
    return logging.getLogger(name)
