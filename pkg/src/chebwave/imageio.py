"""PNG / binary PPM input and output for 8-bit RGB images."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

SUPPORTED = {".png": "PNG", ".ppm": "PPM"}


def read_image(path) -> np.ndarray:
    """Load an image as a float ``(H, W, 3)`` array with values in [0, 255]."""
    path = Path(path)
    if path.suffix.lower() not in SUPPORTED:
        raise ValueError(f"unsupported image format {path.suffix!r}; use .png or .ppm")
    with Image.open(path) as im:
        im.load()
        if im.mode != "RGB":
            im = im.convert("RGB")
        return np.asarray(im, dtype=np.uint8).astype(float)


def to_uint8(image) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image, dtype=float)), 0, 255).astype(np.uint8)


def write_image(path, image) -> Path:
    path = Path(path)
    fmt = SUPPORTED.get(path.suffix.lower())
    if fmt is None:
        raise ValueError(f"unsupported image format {path.suffix!r}; use .png or .ppm")
    data = to_uint8(image)
    Image.fromarray(data).save(path, format=fmt)
    return path
