"""Binary morphology on 2-D boolean masks (3x3 square structuring element)."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .image_core import as_mask

SQUARE = np.ones((3, 3), dtype=bool)
CROSS = ndimage.generate_binary_structure(2, 1)


def label_components(mask, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label connected components; ``connectivity`` is 4 or 8."""
    structure = SQUARE if connectivity == 8 else CROSS
    labels, n = ndimage.label(as_mask(mask), structure=structure)
    return labels, n


def touches_border(labels: np.ndarray, n: int) -> np.ndarray:
    """Boolean vector over labels 0..n: component has a pixel on any image edge."""
    edge = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    hit = np.zeros(n + 1, dtype=bool)
    hit[edge] = True
    return hit


def erode(mask) -> np.ndarray:
    return ndimage.binary_erosion(as_mask(mask), structure=SQUARE, border_value=0)


def dilate(mask) -> np.ndarray:
    return ndimage.binary_dilation(as_mask(mask), structure=SQUARE, border_value=0)


def opening(mask) -> np.ndarray:
    return dilate(erode(mask))


def closing(mask) -> np.ndarray:
    return erode(dilate(mask))


def fill_holes(mask, max_area: float = np.inf) -> np.ndarray:
    """Fill background regions enclosed by ``mask`` whose area is below ``max_area``.

    Background is taken 4-connected so that it is the dual of 8-connected
    foreground; regions touching the image edge are never holes.
    """
    mask = as_mask(mask)
    labels, n = label_components(~mask, connectivity=4)
    if n == 0:
        return mask.copy()
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    fill = ~touches_border(labels, n) & (areas < max_area)
    fill[0] = False
    return mask | fill[labels]
