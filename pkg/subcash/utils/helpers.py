"""
Helper utilities for logging setup and deterministic file output.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd

import config


def setup_logging(level: str = config.LOG_LEVEL, log_file: Optional[Path] = None) -> logging.Logger:
    """
    Setup logging configuration.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path to log file

    Returns:
        Configured logger
    """
    handlers: list[logging.Handler] = [logging.StreamHandler()]

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=config.LOG_FORMAT,
        datefmt=config.LOG_DATE_FORMAT,
        handlers=handlers,
        force=True,
    )

    return logging.getLogger("subcash")


def save_frame(df: pd.DataFrame, file_path: Union[str, Path]) -> Path:
    """
    Save a DataFrame as CSV with '.' decimals, ',' separators and LF line endings.

    Args:
        df: DataFrame to save
        file_path: Destination path; parent directories are created

    Returns:
        The written path
    """
    file_path = ensure_dir(Path(file_path).parent) / Path(file_path).name
    df.to_csv(file_path, index=False, sep=",", decimal=".", lineterminator="\n", float_format="%.12f", na_rep="")
    logging.getLogger(__name__).info("Saved %d rows to %s", len(df), file_path)
    return file_path


def ensure_dir(path: Union[str, Path]) -> Path:
    """
    Ensure directory exists, create if it doesn't.

    Args:
        path: Directory path

    Returns:
        Path object
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
