"""From the final label field to a smoothed binary lesion mask."""

from __future__ import annotations

import numpy as np

from .errors import AmbiguousClassError
from .image_core import as_mask
from .morphology import closing, label_components, opening
from .mrf_em import ClassParams


def lesion_class(params: ClassParams) -> int:
    """Index of the brightest class (lesions are hyperintense against aerated lung)."""
    means = np.asarray(params.means)
    top = np.flatnonzero(means == means.max())
    if top.size > 1:
        raise AmbiguousClassError(f"classes {top.tolist()} share the maximal mean")
    return int(top[0])


def extract_lesion_mask(lf, params: ClassParams, roi) -> np.ndarray:
    lf = np.asarray(lf)
    roi = as_mask(roi, lf.shape)
    if not roi.any():
        return np.zeros(lf.shape, dtype=bool)
    return roi & (lf == lesion_class(params))


def morphological_smooth(mask) -> np.ndarray:
    """3x3 opening followed by 3x3 closing; pixels beyond the edge count as background."""
    return closing(opening(mask))


def remove_small_components(mask, min_area: int) -> np.ndarray:
    """Drop 8-connected components with fewer than ``min_area`` pixels."""
    if min_area < 0:
        raise ValueError("min_area must be >= 0")
    mask = as_mask(mask)
    labels, n = label_components(mask, connectivity=8)
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    keep = areas >= min_area
    keep[0] = False
    return keep[labels]
