import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctlesion.errors import DimensionError, EmptyScopeError
from ctlesion.metrics import ConfusionMatrix, compute_metrics, confusion

PUBLISHED_CM = ConfusionMatrix(tp=24988, tn=208076, fp=1066, fn=2527)

counts = st.integers(0, 10**6)
matrices = st.builds(ConfusionMatrix, tp=counts, tn=counts, fp=counts, fn=counts).filter(lambda c: c.total > 0)


def tally(pred, gt):
    tp = tn = fp = fn = 0
    for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
        if p and g:
            tp += 1
        elif p:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def test_confusion_identity():
    gt = np.zeros((4, 4), bool)
    gt[:2] = True
    assert confusion(gt, gt) == ConfusionMatrix(tp=8, tn=8, fp=0, fn=0)


def test_confusion_all_false_prediction():
    gt = np.zeros((4, 4), bool)
    gt[0, :3] = True
    cm = confusion(np.zeros_like(gt), gt)
    assert cm.tp == 0 and cm.fn == 3


def test_confusion_random_vs_tally():
    rng = np.random.default_rng(11)
    pred, gt = rng.random((64, 64)) < 0.3, rng.random((64, 64)) < 0.4
    assert confusion(pred, gt) == tally(pred, gt)
    scope = rng.random((64, 64)) < 0.5
    assert confusion(pred, gt, scope) == tally(pred[scope], gt[scope])


def test_confusion_dimension_mismatch():
    with pytest.raises(DimensionError):
        confusion(np.zeros((3, 3), bool), np.zeros((3, 4), bool))


def test_published_confusion_matrix():
    m = compute_metrics(PUBLISHED_CM)
    assert round(100 * m.sensitivity, 2) == 90.82
    assert round(100 * m.specificity, 2) == 99.49
    assert round(100 * m.precision, 2) == 95.91
    assert round(100 * m.npv, 2) == 98.80
    assert round(100 * m.accuracy, 2) == 98.48
    assert round(100 * m.jaccard, 2) == 87.43
    assert round(100 * m.dice, 2) == 93.29


def test_undefined_ratios():
    m = compute_metrics(ConfusionMatrix(tp=0, tn=100, fp=0, fn=0))
    assert m.accuracy == 1.0 and m.specificity == 1.0 and m.npv == 1.0
    assert m.jaccard is None and m.dice is None and m.precision is None and m.sensitivity is None


def test_empty_scope():
    with pytest.raises(EmptyScopeError):
        compute_metrics(ConfusionMatrix(0, 0, 0, 0))


@settings(max_examples=300)
@given(matrices)
def test_metric_invariants(cm):
    m = compute_metrics(cm)
    for v in m.as_dict().values():
        assert v is None or 0 <= v <= 1
    if m.jaccard is not None:
        assert abs(m.dice - 2 * m.jaccard / (1 + m.jaccard)) <= 1e-12
    swapped = compute_metrics(ConfusionMatrix(tp=cm.tp, tn=cm.tn, fp=cm.fn, fn=cm.fp))
    assert swapped.dice == m.dice and swapped.jaccard == m.jaccard
    assert swapped.precision == m.sensitivity and swapped.sensitivity == m.precision
    assert swapped.specificity == m.npv and swapped.npv == m.specificity


@settings(max_examples=100)
@given(st.integers(1, 20).flatmap(lambda n: st.tuples(arrays(bool, (n, n)), arrays(bool, (n, n)))))
def test_counts_sum_to_scope(pair):
    pred, gt = pair
    assert confusion(pred, gt).total == pred.size
