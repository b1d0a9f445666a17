"""
File utilities for atomic-beamformer.
Provides directory creation and stable hashing of result artifacts.
"""

import hashlib
from pathlib import Path
from typing import Union


def ensure_directory_exists(path: Union[str, Path]) -> Path:
    """Ensure directory exists, creating it if necessary."""
    path_obj = Path(path)
    path_obj.mkdir(parents=True, exist_ok=True)
    return path_obj


def ensure_parent_exists(file_path: Union[str, Path]) -> Path:
    """Create the parent directory of a file that is about to be written."""
    path_obj = Path(file_path)
    ensure_directory_exists(path_obj.parent)
    return path_obj


def sha256_text(text: str) -> str:
    """Hex SHA-256 of UTF-8 text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(file_path: Union[str, Path]) -> str:
    """Hex SHA-256 of a file's bytes."""
    return hashlib.sha256(Path(file_path).read_bytes()).hexdigest()


def svg_path_for(csv_path: Union[str, Path]) -> Path:
    """SVG companion path for a CSV result file."""
    return Path(csv_path).with_suffix(".svg")
