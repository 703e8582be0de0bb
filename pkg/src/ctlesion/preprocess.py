"""Artifact removal: isolate the lung fields with a bi-level threshold filter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateHistogramError, EmptyRegionError
from .image_core import LEVELS, Histogram, as_gray, compute_histogram
from .morphology import fill_holes, label_components, touches_border


@dataclass(frozen=True)
class StripConfig:
    """Parameters of :func:`strip_artifacts`.

    ``min_separability`` gates the Otsu split: when the between-class share
    of the variance of the nonzero pixels is below it, the image has no
    dark/bright body structure left and every nonzero pixel is a lung
    candidate (this is what makes the stripper idempotent).
    """

    min_lung_area_frac: float = 0.005
    hole_fill_area: float = math.inf
    min_separability: float = 0.8

    def __post_init__(self):
        if not 0 <= self.min_lung_area_frac < 1:
            raise ValueError("min_lung_area_frac must lie in [0, 1)")
        if self.hole_fill_area < 0:
            raise ValueError("hole_fill_area must be non-negative")
        if not 0 <= self.min_separability <= 1:
            raise ValueError("min_separability must lie in [0, 1]")


def _between_class_variance(counts: np.ndarray) -> np.ndarray:
    """sigma_B^2(t) for the split [0, t] | [t+1, 255], t = 0..254 (NaN if a side is empty)."""
    p = counts / counts.sum()
    levels = np.arange(LEVELS)
    w0 = np.cumsum(p)[:-1]
    m0 = np.cumsum(p * levels)[:-1]
    mu = m0[-1] + p[-1] * (LEVELS - 1)
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        var = (mu * w0 - m0) ** 2 / (w0 * w1)
    occupied0 = np.cumsum(counts)[:-1] > 0
    occupied1 = np.cumsum(counts[::-1])[::-1][1:] > 0
    return np.where(occupied0 & occupied1, var, np.nan)


def otsu_bilevel(hist: Histogram) -> int:
    """Threshold t maximising between-class variance of [0, t] vs [t+1, 255].

    Ties resolve to the smallest t.
    """
    counts = hist.counts
    if np.count_nonzero(counts) < 2:
        raise DegenerateHistogramError("Otsu needs at least two occupied bins")
    var = _between_class_variance(counts)
    best = np.nanmax(var)
    return int(np.flatnonzero(var == best)[0])


def otsu_separability(hist: Histogram, t: int) -> float:
    """Fraction of total variance explained by the split at ``t``."""
    p = hist.probabilities
    levels = np.arange(LEVELS)
    total_var = float(np.sum(p * (levels - np.sum(p * levels)) ** 2))
    if total_var == 0:
        return 0.0
    return float(_between_class_variance(hist.counts)[t] / total_var)


def strip_artifacts(img, cfg: StripConfig = StripConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Zero everything but the lung fields.

    Zero-valued pixels are treated as already-removed padding: they are left
    out of the Otsu histogram and never become lung candidates.  Dark
    nonzero pixels (at or below the Otsu cut) are grouped into 8-connected
    components; components touching the image edge (ambient air) or smaller
    than ``min_lung_area_frac`` of the image are discarded, and enclosed
    holes below ``hole_fill_area`` are filled so that bright lesions inside
    a lung stay in the region.

    Returns ``(lung, lung_roi)`` where ``lung`` equals ``img`` on the roi and
    0 elsewhere.
    """
    img = as_gray(img)
    nonzero = img > 0
    if not nonzero.any():
        raise EmptyRegionError("image has no nonzero pixels")

    hist = compute_histogram(img, nonzero)
    candidates = nonzero
    if np.count_nonzero(hist.counts) >= 2:
        t = otsu_bilevel(hist)
        if otsu_separability(hist, t) >= cfg.min_separability:
            candidates = nonzero & (img <= t)

    labels, n = label_components(candidates, connectivity=8)
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    min_area = cfg.min_lung_area_frac * img.size
    keep = ~touches_border(labels, n) & (areas >= min_area)
    keep[0] = False
    if not keep.any():
        raise EmptyRegionError("no lung-candidate component survived")

    roi = fill_holes(keep[labels], cfg.hole_fill_area)
    lung = np.where(roi, img, 0).astype(np.uint8)
    return lung, roi
