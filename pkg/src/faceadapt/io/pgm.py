"""Binary PGM (P5) reading and writing.

Only the binary variant is supported; pixel values are scaled to [0, 1] on
read by dividing by the file's maxval. Images with maxval > 255 use 2-byte
big-endian samples per the PGM convention.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["PgmError", "read_pgm", "write_pgm"]


class PgmError(ValueError):
    pass


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comment lines between header tokens.
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise PgmError("truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary PGM file into a (height, width) float32 array in [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] == b"P2":
        raise PgmError(f"{path}: unsupported PGM variant P2 (ASCII); only binary P5 is supported")
    if buf[:2] != b"P5":
        raise PgmError(f"{path}: not a PGM file (missing P5 magic)")
    pos = 2
    width_tok, pos = _read_token(buf, pos)
    height_tok, pos = _read_token(buf, pos)
    maxval_tok, pos = _read_token(buf, pos)
    try:
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except ValueError as exc:
        raise PgmError(f"{path}: malformed PGM header") from exc
    if width <= 0 or height <= 0:
        raise PgmError(f"{path}: invalid dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise PgmError(f"{path}: maxval {maxval} out of range (0, 65535]")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    payload = buf[pos : pos + count * dtype.itemsize]
    if len(payload) < count * dtype.itemsize:
        raise PgmError(f"{path}: truncated pixel payload")
    pixels = np.frombuffer(payload, dtype=dtype).astype(np.float32) / float(maxval)
    return pixels.reshape(height, width)


def write_pgm(path: str | os.PathLike, image: np.ndarray, maxval: int = 255) -> None:
    """Write a (height, width) array of reals in [0, 1] as binary PGM."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise PgmError(f"image must be 2-D, got shape {arr.shape}")
    if not 0 < maxval <= 65535:
        raise PgmError(f"maxval {maxval} out of range (0, 65535]")
    quantized = np.rint(np.clip(arr, 0.0, 1.0) * maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode())
        fh.write(quantized.astype(dtype).tobytes())
