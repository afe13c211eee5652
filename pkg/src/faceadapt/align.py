"""Eye-based face alignment.

The face is centered and rotated so that the eyes are level; the warp is a
single similarity transform (rotation + uniform scale + translation) chosen
so the image-left eye center lands at (0.30*S, 0.35*S) and the image-right
eye center at (0.70*S, 0.35*S) of the S x S output. Pixels are produced by
bilinear sampling of the inverse map; reads outside the source image yield 0.

Eye centers are the means of the standard 68-point groups: indices 36-41 for
the image-left eye and 42-47 for the image-right eye (0-based). "Left" and
"right" are in image coordinates (viewer's perspective), not the subject's.
"""

from __future__ import annotations

import numpy as np

from .validation import DegenerateGeometryError, as_gray_image, as_landmarks

LEFT_EYE_INDICES = slice(36, 42)
RIGHT_EYE_INDICES = slice(42, 48)

LEFT_EYE_X = 0.30
RIGHT_EYE_X = 0.70
EYE_Y = 0.35

__all__ = ["eye_centers", "alignment_transform", "align_face"]


def eye_centers(landmarks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(image-left, image-right) eye centers as the means of their landmark groups."""
    lm = as_landmarks(landmarks)
    return lm[LEFT_EYE_INDICES].mean(axis=0), lm[RIGHT_EYE_INDICES].mean(axis=0)


def alignment_transform(landmarks: np.ndarray, out_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Similarity transform (A, t) with p -> A @ p + t mapping eyes to their targets."""
    left, right = eye_centers(landmarks)
    src = complex(*(right - left))
    if src == 0:
        raise DegenerateGeometryError("coincident eye centers; alignment transform undefined")
    dst = complex((RIGHT_EYE_X - LEFT_EYE_X) * out_size, 0.0)
    z = dst / src  # scale * rotation
    A = np.array([[z.real, -z.imag], [z.imag, z.real]])
    t = np.array([LEFT_EYE_X * out_size, EYE_Y * out_size]) - A @ left
    return A, t


def _bilinear_sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample image at real coordinates (xs, ys); out-of-bounds reads give 0."""
    h, w = image.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    def fetch(yi, xi):
        valid = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
        out = np.zeros(yi.shape, dtype=np.float64)
        out[valid] = image[yi[valid], xi[valid]]
        return out

    v00 = fetch(y0, x0)
    v01 = fetch(y0, x0 + 1)
    v10 = fetch(y0 + 1, x0)
    v11 = fetch(y0 + 1, x0 + 1)
    top = v00 * (1 - fx) + v01 * fx
    bot = v10 * (1 - fx) + v11 * fx
    return top * (1 - fy) + bot * fy


def align_face(image: np.ndarray, landmarks: np.ndarray, out_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Warp image and landmarks into the canonical eye-aligned frame.

    Returns the (out_size, out_size) float32 image with pixels clamped to
    [0, 1] and the transformed (68, 2) landmarks.
    """
    img = as_gray_image(image).astype(np.float64)
    lm = as_landmarks(landmarks)
    if out_size <= 0:
        raise ValueError("out_size must be positive")
    A, t = alignment_transform(lm, out_size)
    A_inv = np.linalg.inv(A)

    # Pixel (x, y) samples the source at A^-1 ((x, y) - t).
    ys, xs = np.mgrid[0:out_size, 0:out_size].astype(np.float64)
    pts = np.stack([xs.ravel() - t[0], ys.ravel() - t[1]])
    src = A_inv @ pts
    warped = _bilinear_sample(img, src[0], src[1]).reshape(out_size, out_size)
    warped = np.clip(warped, 0.0, 1.0).astype(np.float32)

    new_lm = lm @ A.T + t
    return warped, new_lm
