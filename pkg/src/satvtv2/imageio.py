"""8-bit grayscale image files (binary PGM and PNG) backed by Pillow."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def to_uint8(u: np.ndarray) -> np.ndarray:
    """Clamp to ``[0, 255]`` and round half to even."""
    return np.clip(np.rint(np.asarray(u, dtype=float)), 0, 255).astype(np.uint8)


def load_image(path: str | Path) -> np.ndarray:
    """Read a grayscale image as a float array (colour inputs are converted to luma)."""
    with Image.open(path) as im:
        if im.mode not in ("L", "I", "I;16", "F"):
            im = im.convert("L")
        return np.asarray(im, dtype=float)


def save_image(path: str | Path, u: np.ndarray) -> np.ndarray:
    """Write ``u`` as 8-bit P5 PGM or PNG (chosen by suffix); returns the stored values."""
    path = Path(path)
    data = to_uint8(u)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        Image.fromarray(data).save(path, format="PPM")
    elif suffix == ".png":
        Image.fromarray(data).save(path, format="PNG")
    else:
        raise ValueError(f"unsupported image suffix {path.suffix!r}; use .pgm or .png")
    return data
