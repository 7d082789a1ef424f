"""A synthetic two-label emblem used as image truth in experiments and tests."""

from __future__ import annotations

import numpy as np

from selsample.pnm import write_pnm


def emblem_raster(size: int = 256) -> np.ndarray:
    """Bat-like silhouette: black (0) shape on a white (255) background.

    Built from an ellipse with scalloped lower edge, a head with ears and a
    notch in the top edge of each wing.
    """
    t = (np.arange(size) + 0.5) / size
    x, y = np.meshgrid(t, 1.0 - t, indexing="xy")  # row 0 is the top of the image
    wings = ((x - 0.5) / 0.44) ** 2 + ((y - 0.5) / 0.2) ** 2 <= 1.0
    for cx in (0.2, 0.35, 0.65, 0.8):
        wings &= (x - cx) ** 2 + (y - 0.3) ** 2 > 0.085**2
    for cx in (0.3, 0.7):
        wings &= (x - cx) ** 2 + (y - 0.72) ** 2 > 0.11**2
    head = ((x - 0.5) / 0.09) ** 2 + ((y - 0.58) / 0.12) ** 2 <= 1.0
    ears = (np.abs(x - 0.5) > 0.02) & (np.abs(x - 0.5) < 0.07) & (y > 0.6) & (y < 0.76 - 1.2 * np.abs(np.abs(x - 0.5) - 0.045))
    shape = wings | head | ears
    return np.where(shape, 0, 255).astype(np.int64)


def write_emblem(path, size: int = 256) -> None:
    write_pnm(path, emblem_raster(size))
