"""Utility functions for MMSOUND."""

import os
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .errors import SounderIOError

ArrayLike = Union[float, np.ndarray]


def wrap_angle_deg(angle: ArrayLike) -> ArrayLike:
    """Map an angle into (-180, 180].

    Args:
        angle: Angle in degrees

    Returns:
        Equivalent angle in (-180, 180]
    """
    wrapped = -np.mod(-np.asarray(angle, dtype=float) + 180.0, 360.0) + 180.0
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angle_diff_deg(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    """Signed smallest difference a - b in (-180, 180]."""
    return wrap_angle_deg(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def format_delay(seconds: float) -> str:
    """Format a delay or delay spread for display.

    Args:
        seconds: Delay in seconds

    Returns:
        Formatted string in ns or us
    """
    if abs(seconds) >= 1e-6:
        return f"{seconds * 1e6:.3f} µs"
    return f"{seconds * 1e9:.2f} ns"


def format_db(value: float) -> str:
    """Format a dB value."""
    return f"{value:.2f} dB"


def atomic_write(path: Union[str, Path], data: bytes) -> None:
    """Write bytes to path via a temporary file in the same directory and rename.

    Raises:
        SounderIOError: the file cannot be written
    """
    path = Path(path)
    tmp_name = None
    try:
        with tempfile.NamedTemporaryFile(
            dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False
        ) as tmp:
            tmp_name = tmp.name
            tmp.write(data)
        os.replace(tmp_name, path)
    except OSError as e:
        if tmp_name and os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise SounderIOError(f"cannot write {path}: {e}") from e
