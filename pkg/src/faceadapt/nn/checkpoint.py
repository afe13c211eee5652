"""Model checkpoints: manifest.json + weights.bin.

The manifest records the architecture description plus tensor names, shapes,
and byte offsets into weights.bin, which holds the concatenated row-major
little-endian float32 values in manifest order.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

__all__ = ["save_checkpoint", "load_checkpoint"]


def save_checkpoint(directory: str | os.PathLike, architecture: dict, tensors: dict) -> None:
    """Write architecture plus named float32 tensors under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    blobs = []
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {"architecture": architecture, "dtype": "f32le", "tensors": entries}
    with open(directory / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    with open(directory / "weights.bin", "wb") as fh:
        fh.write(b"".join(blobs))


def load_checkpoint(directory: str | os.PathLike) -> tuple[dict, dict]:
    """Read (architecture, {name: float32 array}) from ``directory``."""
    directory = Path(directory)
    with open(directory / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("dtype") != "f32le":
        raise ValueError(f"unsupported checkpoint dtype {manifest.get('dtype')!r}")
    blob = (directory / "weights.bin").read_bytes()
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=start).reshape(shape)
        tensors[entry["name"]] = np.array(arr)  # writable copy
    return manifest["architecture"], tensors
