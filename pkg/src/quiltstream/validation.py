"""Small argument-validation helpers shared across modules."""

from __future__ import annotations

import numpy as np


def ensure_rgb8(arr, name: str) -> np.ndarray:
    """Require a (h, w, 3) uint8 array; returns it unchanged."""
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be an ndarray, got {type(arr).__name__}")
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (h, w, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"{name} must be uint8, got {arr.dtype}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be nonempty, got {arr.shape}")
    return arr


def ensure_depth32(arr, name: str) -> np.ndarray:
    """Require a 2-D depth map; returns it as float32 (no copy if possible)."""
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be an ndarray, got {type(arr).__name__}")
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float32)


def ensure_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)
