"""Input validation helpers shared across the package."""

import numpy as np

N_LANDMARKS = 68

__all__ = ["N_LANDMARKS", "as_landmarks", "as_gray_image", "DegenerateGeometryError"]


class DegenerateGeometryError(ValueError):
    """Raised when geometry is too degenerate for the requested operation."""


def as_landmarks(points, n_points: int = N_LANDMARKS) -> np.ndarray:
    """Validate and return landmarks as a float64 array of shape (n_points, 2).

    Coordinates must be finite; the point count is fixed (68 for faces).
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"landmarks must have shape (n, 2), got {arr.shape}")
    if n_points is not None and arr.shape[0] != n_points:
        raise ValueError(f"expected {n_points} landmarks, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("landmarks contain non-finite coordinates")
    return arr


def as_gray_image(pixels) -> np.ndarray:
    """Validate and return a grayscale image as (height, width) float32 in [0, 1]."""
    arr = np.asarray(pixels, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2-D (height, width), got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("image is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite pixels")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("pixels must lie in [0, 1]")
    return arr
