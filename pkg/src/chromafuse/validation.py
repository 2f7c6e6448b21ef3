"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

# Values this far outside [0, 1] are treated as float noise and clamped
# rather than rejected.
_RANGE_SLACK = 1e-9


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Convert to a float64 ndarray, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_rgb_image(img, name: str = "image") -> np.ndarray:
    """Validate an H x W x 3 float image with values in [0, 1].

    Values within a tiny epsilon of the range are clamped; anything
    further out is rejected.
    """
    arr = as_float_array(img, name)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.min() < -_RANGE_SLACK or arr.max() > 1.0 + _RANGE_SLACK:
        raise ValueError(
            f"{name} values must lie in [0, 1], got range "
            f"[{arr.min():.6g}, {arr.max():.6g}]"
        )
    return np.clip(arr, 0.0, 1.0)


def check_gray_image(img, name: str = "gray image") -> np.ndarray:
    """Validate a grayscale image, returning it with shape (H, W)."""
    arr = as_float_array(img, name)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W) or (H, W, 1), got {arr.shape}")
    if arr.min() < -_RANGE_SLACK or arr.max() > 1.0 + _RANGE_SLACK:
        raise ValueError(
            f"{name} values must lie in [0, 1], got range "
            f"[{arr.min():.6g}, {arr.max():.6g}]"
        )
    return np.clip(arr, 0.0, 1.0)


def check_image_batch(batch, name: str = "image batch") -> np.ndarray:
    """Validate an N x H x W x 3 stack of RGB images."""
    arr = as_float_array(batch, name)
    if arr.ndim != 4 or arr.shape[3] != 3:
        raise ValueError(f"{name} must have shape (N, H, W, 3), got {arr.shape}")
    if arr.min() < -_RANGE_SLACK or arr.max() > 1.0 + _RANGE_SLACK:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)
