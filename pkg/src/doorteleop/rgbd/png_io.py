"""PNG export for debugging: 8-bit RGB color and 16-bit millimeter depth."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .render import Frame


def save_color_png(frame: Frame, path) -> None:
    Image.fromarray(frame.color, mode="RGB").save(path, format="PNG")


def save_depth_png(frame: Frame, path) -> None:
    """Depth in integer millimeters; 0 stays 0 (hole), > 65.535 m saturates."""
    mm = np.clip(np.round(frame.depth * 1000.0), 0, 65535).astype(np.uint16)
    Image.fromarray(mm).save(path, format="PNG")


def load_depth_png(path) -> np.ndarray:
    """Inverse of save_depth_png, returning meters."""
    mm = np.asarray(Image.open(path), dtype=np.uint16)
    return mm.astype(np.float64) / 1000.0
