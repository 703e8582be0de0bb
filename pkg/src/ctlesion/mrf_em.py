"""Three-class MRF-EM segmentation.

Gaussian emission per class, Potts prior on the 4-neighbourhood, ICM as the
labelling step and closed-form Gaussian re-estimation as the M-step.  The
energy minimised is

    U = sum_{p in roi} (I_p - mu_l)^2 / (2 var_l) + 0.5 ln(2 pi var_l)
        + beta * #{unordered 4-neighbour roi pairs with different labels}
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .entropy_threshold import ThresholdSet
from .errors import DimensionError, EmptyRegionError
from .image_core import LEVELS, as_gray, as_mask

N_CLASSES = 3
PRIOR_EPS = 1e-6


@dataclass(frozen=True)
class ClassParams:
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for name in ("means", "variances", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.means) == len(self.variances) == len(self.weights)):
            raise ValueError("per-class arrays differ in length")
        if (self.variances <= 0).any():
            raise ValueError("variances must be positive")

    def data_cost(self) -> np.ndarray:
        """Negative log-likelihood table, shape (256, n_classes)."""
        v = np.arange(LEVELS, dtype=float)[:, None]
        return (v - self.means) ** 2 / (2 * self.variances) + 0.5 * np.log(2 * np.pi * self.variances)


@dataclass(frozen=True)
class MrfConfig:
    beta: float = 1.0
    em_iterations: int = 10
    icm_sweeps_per_em: int = 5
    rel_tolerance: float = 1e-4
    variance_floor: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.em_iterations < 1 or self.icm_sweeps_per_em < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.rel_tolerance <= 0:
            raise ValueError("rel_tolerance must be positive")
        if self.variance_floor <= 0:
            raise ValueError("variance_floor must be positive")


@dataclass
class SegmentResult:
    labels: np.ndarray
    params: ClassParams
    trace: list[float] = field(default_factory=list)
    sweep_trace: list[float] = field(default_factory=list)


def _check(img, lf, roi):
    img = as_gray(img)
    roi = as_mask(roi, img.shape)
    lf = np.asarray(lf)
    if lf.shape != img.shape:
        raise DimensionError(f"label field shape {lf.shape} != image shape {img.shape}")
    return img, lf, roi


def initialize_labels(img, t: ThresholdSet, roi) -> np.ndarray:
    """I <= t1 -> 0, t1 < I <= t2 -> 1, I > t2 -> 2; pixels outside roi -> 0."""
    img = as_gray(img)
    roi = as_mask(roi, img.shape)
    if t.k != 2:
        raise ValueError("three-class labelling needs exactly two cuts")
    labels = t.classify(img).astype(np.int8)
    labels[~roi] = 0
    return labels


def estimate_class_params(img, lf, roi, variance_floor: float = 1.0,
                          previous: ClassParams | None = None,
                          bands: ThresholdSet | None = None) -> ClassParams:
    """Per-class sample mean, floored variance and roi fraction.

    A class without pixels keeps ``previous`` mean/variance when given;
    otherwise it falls back to the midpoint of its intensity band (from
    ``bands``, default cuts 85/170) with the floor variance.  Its weight
    becomes ``PRIOR_EPS`` before renormalisation.
    """
    img, lf, roi = _check(img, lf, roi)
    values = img[roi].astype(float)
    if values.size == 0:
        raise EmptyRegionError("roi is empty")
    labels = lf[roi]
    bands = bands or ThresholdSet((85, 170))
    means = np.empty(N_CLASSES)
    variances = np.empty(N_CLASSES)
    weights = np.empty(N_CLASSES)
    for c in range(N_CLASSES):
        x = values[labels == c]
        if x.size:
            means[c] = x.mean()
            variances[c] = max(float(((x - means[c]) ** 2).mean()), variance_floor)
            weights[c] = x.size / values.size
        elif previous is not None:
            means[c] = previous.means[c]
            variances[c] = previous.variances[c]
            weights[c] = PRIOR_EPS
        else:
            lo, hi = bands.bands()[c]
            means[c] = (lo + hi) / 2
            variances[c] = variance_floor
            weights[c] = PRIOR_EPS
    return ClassParams(means, variances, weights / weights.sum())


def total_energy(img, lf, params: ClassParams, beta: float, roi) -> float:
    img, lf, roi = _check(img, lf, roi)
    cost = params.data_cost()
    data = cost[img[roi], lf[roi]].sum()
    h = roi[:, 1:] & roi[:, :-1] & (lf[:, 1:] != lf[:, :-1])
    v = roi[1:, :] & roi[:-1, :] & (lf[1:, :] != lf[:-1, :])
    return float(data + beta * (np.count_nonzero(h) + np.count_nonzero(v)))


@njit(cache=True)
def _icm_kernel(img, labels, roi, cost, beta):
    h, w = img.shape
    ncls = cost.shape[1]
    for r in range(h):
        for c in range(w):
            if not roi[r, c]:
                continue
            best_l = 0
            best_e = np.inf
            for l in range(ncls):
                e = cost[img[r, c], l]
                if r > 0 and roi[r - 1, c] and labels[r - 1, c] != l:
                    e += beta
                if r + 1 < h and roi[r + 1, c] and labels[r + 1, c] != l:
                    e += beta
                if c > 0 and roi[r, c - 1] and labels[r, c - 1] != l:
                    e += beta
                if c + 1 < w and roi[r, c + 1] and labels[r, c + 1] != l:
                    e += beta
                if e < best_e:
                    best_e = e
                    best_l = l
            labels[r, c] = best_l


def icm_sweep(img, lf, params: ClassParams, beta: float, roi) -> np.ndarray:
    """One raster-order ICM pass; updates are visible to later pixels in the same pass.

    Ties go to the lower class index.  Returns a new label field.
    """
    img, lf, roi = _check(img, lf, roi)
    labels = np.ascontiguousarray(lf, dtype=np.int8).copy()
    _icm_kernel(np.ascontiguousarray(img), labels, np.ascontiguousarray(roi),
                np.ascontiguousarray(params.data_cost()), float(beta))
    return labels


def segment(img, init, cfg: MrfConfig = MrfConfig(), roi=None,
            bands: ThresholdSet | None = None) -> SegmentResult:
    """Alternate M-step and ICM sweeps until the energy settles.

    ``trace`` holds the energy after each outer iteration and
    ``sweep_trace`` the energy after every ICM sweep.  The loop stops
    once ``|dU| <= rel_tolerance * |U|`` relative to the previous outer
    iteration (the first iteration compares against the energy of ``init``
    under the initial parameters) or after ``em_iterations``.
    """
    img = as_gray(img)
    roi = np.ones(img.shape, dtype=bool) if roi is None else as_mask(roi, img.shape)
    img, labels, roi = _check(img, np.asarray(init, dtype=np.int8), roi)
    if not roi.any():
        raise EmptyRegionError("roi is empty")
    params = estimate_class_params(img, labels, roi, cfg.variance_floor, bands=bands)
    prev = total_energy(img, labels, params, cfg.beta, roi)
    trace: list[float] = []
    sweeps: list[float] = []
    for it in range(cfg.em_iterations):
        if it > 0:
            params = estimate_class_params(img, labels, roi, cfg.variance_floor, previous=params)
        for _ in range(cfg.icm_sweeps_per_em):
            labels = icm_sweep(img, labels, params, cfg.beta, roi)
            sweeps.append(total_energy(img, labels, params, cfg.beta, roi))
        energy = sweeps[-1]
        trace.append(energy)
        if abs(energy - prev) <= cfg.rel_tolerance * abs(energy):
            break
        prev = energy
    return SegmentResult(labels, params, trace, sweeps)


def write_energy_csv(path, trace) -> None:
    from .entropy_threshold import write_trace_csv

    write_trace_csv(path, trace, "energy")
