#!/usr/bin/env python3
"""Console, logging and file helpers shared by the CLI commands."""

import json
import logging
import os
from pathlib import Path
from typing import Any, List, Union

from rich.console import Console
from rich.logging import RichHandler

from .core.exceptions import ModelIOError, ModelParseError

# Initialize rich console
console = Console()

LOG_LEVEL_ENV = "MTD_LOG_LEVEL"


def setup_logging(level: str = None) -> logging.Logger:
    """Attach a RichHandler to the package logger; level from MTD_LOG_LEVEL unless given."""
    level_name = (level or os.environ.get(LOG_LEVEL_ENV, "WARNING")).upper()
    logger = logging.getLogger("mtd_cli")
    logger.setLevel(getattr(logging, level_name, logging.WARNING))
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    return logger


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise ModelIOError(str(path), f"Cannot write file: {e}")
    return path


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ModelIOError(str(path), "File not found")
    except OSError as e:
        raise ModelIOError(str(path), f"Cannot read file: {e}")
    except json.JSONDecodeError as e:
        raise ModelParseError(str(path), f"Invalid JSON: {e}")


def write_text(text: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise ModelIOError(str(path), f"Cannot write file: {e}")
    return path


def parse_int_list(value: str) -> List[int]:
    """Parse '0,1,2' or a range '0-4' into integers."""
    items: List[int] = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            items.extend(range(int(lo), int(hi) + 1))
        else:
            items.append(int(part))
    return items


def parse_float_list(value: str) -> List[float]:
    return [float(part) for part in value.split(",") if part.strip()]
