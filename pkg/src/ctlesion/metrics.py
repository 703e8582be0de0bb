"""Confusion counts and the seven overlap/classification scores.

Ratios whose denominator is zero are reported as ``None`` (undefined) rather
than 0, so lesion-free slices do not silently deflate corpus means.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import EmptyScopeError
from .image_core import as_mask

METRIC_NAMES = ("jaccard", "dice", "accuracy", "precision", "sensitivity", "specificity", "npv")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if int(v) != v or v < 0:
                raise ValueError(f"{f.name} must be a non-negative integer")
            object.__setattr__(self, f.name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    jaccard: float | None
    dice: float | None
    accuracy: float | None
    precision: float | None
    sensitivity: float | None
    specificity: float | None
    npv: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def confusion(pred, gt, scope=None) -> ConfusionMatrix:
    gt = as_mask(gt)
    pred = as_mask(pred, gt.shape)
    if scope is not None:
        scope = as_mask(scope, gt.shape)
        pred, gt = pred[scope], gt[scope]
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = int(pred.size - tp - fp - fn)
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total == 0:
        raise EmptyScopeError("confusion matrix has no scored pixels")
    tp, tn, fp, fn = cm.tp, cm.tn, cm.fp, cm.fn
    return MetricsReport(
        jaccard=_ratio(tp, tp + fp + fn),
        dice=_ratio(2 * tp, 2 * tp + fp + fn),
        accuracy=_ratio(tp + tn, cm.total),
        precision=_ratio(tp, tp + fp),
        sensitivity=_ratio(tp, tp + fn),
        specificity=_ratio(tn, tn + fp),
        npv=_ratio(tn, tn + fn),
    )


def score_masks(pred, gt, scope=None) -> MetricsReport:
    return compute_metrics(confusion(pred, gt, scope))
