import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import gaussian_ml_labels
from ctlesion.entropy_threshold import ThresholdSet
from ctlesion.errors import EmptyRegionError
from ctlesion.mrf_em import (
    ClassParams,
    MrfConfig,
    estimate_class_params,
    icm_sweep,
    initialize_labels,
    segment,
    total_energy,
)

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
CUTS = ThresholdSet((85, 170))


def unit_params(means, var=1.0):
    return ClassParams(means, [var] * 3, [1 / 3] * 3)


def naive_icm(img, labels, params, beta, roi):
    """Raster-order ICM written out pixel by pixel."""
    labels = labels.copy()
    h, w = img.shape
    for r in range(h):
        for c in range(w):
            if not roi[r, c]:
                continue
            energies = []
            for l in range(3):
                mu, var = params.means[l], params.variances[l]
                e = (img[r, c] - mu) ** 2 / (2 * var) + 0.5 * math.log(2 * math.pi * var)
                for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= rr < h and 0 <= cc < w and roi[rr, cc] and labels[rr, cc] != l:
                        e += beta
                energies.append(e)
            labels[r, c] = int(np.argmin(energies))
    return labels


def three_gaussian_phantom(seed, shape=(64, 64), means=(40, 120, 220), sigma=10):
    rng = np.random.default_rng(seed)
    truth = np.zeros(shape, np.int8)
    truth[:, shape[1] // 3 :] = 1
    truth[:, 2 * shape[1] // 3 :] = 2
    yy, xx = np.mgrid[: shape[0], : shape[1]]
    truth[(yy - 20) ** 2 + (xx - 12) ** 2 < 64] = 2
    img = np.asarray(means)[truth] + sigma * rng.standard_normal(shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), truth


@pytest.mark.parametrize("value,label", [(0, 0), (85, 0), (86, 1), (120, 1), (170, 1), (171, 2), (255, 2)])
def test_initialize_labels_bands(value, label):
    img = np.full((1, 1), value, np.uint8)
    assert initialize_labels(img, CUTS, np.ones((1, 1), bool))[0, 0] == label


def test_initialize_labels_outside_roi_is_first_class():
    img = np.full((2, 2), 255, np.uint8)
    roi = np.array([[True, False], [False, False]])
    assert initialize_labels(img, CUTS, roi).tolist() == [[2, 0], [0, 0]]


def test_estimate_two_pixels():
    img = np.array([[10, 20]], np.uint8)
    p = estimate_class_params(img, np.array([[0, 1]]), np.ones((1, 2), bool), variance_floor=1.0)
    assert p.means[0] == 10 and p.means[1] == 20
    assert p.variances[0] == 1.0 and p.variances[1] == 1.0
    # empty third class: band midpoint, floor variance, epsilon weight
    assert p.means[2] == (171 + 255) / 2
    assert abs(p.weights.sum() - 1) <= 1e-12


def test_estimate_single_class_weight():
    img = np.array([[10, 12, 14]], np.uint8)
    p = estimate_class_params(img, np.zeros((1, 3), int), np.ones((1, 3), bool))
    assert p.weights[0] == pytest.approx(1 / (1 + 2e-6), abs=1e-15)
    assert p.variances[0] == pytest.approx(8 / 3)


def test_estimate_keeps_previous_for_empty_class():
    img = np.array([[10, 12]], np.uint8)
    prev = ClassParams([1, 2, 3], [4, 5, 6], [0.2, 0.3, 0.5])
    p = estimate_class_params(img, np.zeros((1, 2), int), np.ones((1, 2), bool), previous=prev)
    assert p.means[1:].tolist() == [2, 3] and p.variances[1:].tolist() == [5, 6]


def test_estimate_empty_roi():
    with pytest.raises(EmptyRegionError):
        estimate_class_params(np.zeros((2, 2), np.uint8), np.zeros((2, 2), int), np.zeros((2, 2), bool))


def test_estimate_recovers_generating_means():
    # |error| <= 2 sigma / sqrt(n) holds with probability ~0.954 per class; check the rate
    within, worst = 0, 0.0
    for seed in range(100):
        img, truth = three_gaussian_phantom(seed)
        p = estimate_class_params(img, truth, np.ones_like(truth, bool))
        for c, mu in enumerate((40, 120, 220)):
            z = abs(p.means[c] - mu) / (10 / math.sqrt(np.count_nonzero(truth == c)))
            within += z <= 2
            worst = max(worst, z)
    assert within >= 276  # of 300, ~3 standard errors below the nominal 0.954
    assert worst < 4.5


def test_energy_single_pixel():
    img = np.array([[100]], np.uint8)
    e = total_energy(img, np.array([[1]]), unit_params([0, 100, 200]), 5.0, np.ones((1, 1), bool))
    assert e == pytest.approx(HALF_LOG_2PI, abs=1e-12)
    assert e == pytest.approx(0.918939, abs=1e-6)


def test_energy_pair_conventions():
    img = np.array([[100, 200]], np.uint8)
    params = unit_params([0, 100, 200])
    roi = np.ones((1, 2), bool)
    same = total_energy(np.array([[100, 100]], np.uint8), np.array([[1, 1]]), params, 1.0, roi)
    assert same == pytest.approx(2 * HALF_LOG_2PI, abs=1e-12)
    diff = total_energy(img, np.array([[1, 2]]), params, 1.0, roi)
    assert diff == pytest.approx(2 * HALF_LOG_2PI + 1.0, abs=1e-12)


def test_icm_isolated_pixel_nearest_mean():
    img = np.array([[140, 0], [0, 0]], np.uint8)
    roi = np.array([[True, False], [False, False]])
    out = icm_sweep(img, np.zeros((2, 2), int), unit_params([0, 100, 200], 50.0), 3.0, roi)
    assert out[0, 0] == 1


def test_icm_mismatched_pixel_flips_under_strong_prior():
    img = np.full((3, 3), 100, np.uint8)
    img[1, 1] = 110
    labels = np.ones((3, 3), int)
    labels[1, 1] = 2
    params = unit_params([50, 100, 110], 25.0)
    roi = np.ones((3, 3), bool)
    local = [
        (110 - params.means[l]) ** 2 / 50 + 0.5 * math.log(2 * math.pi * 25) + 100 * (4 if l != 1 else 0)
        for l in range(3)
    ]
    assert int(np.argmin(local)) == 1
    assert icm_sweep(img, labels, params, 100.0, roi)[1, 1] == 1


def test_icm_fixed_point():
    img = np.array([[0, 100, 200]], np.uint8)
    labels = np.array([[0, 1, 2]])
    out = icm_sweep(img, labels, unit_params([0, 100, 200]), 0.5, np.ones((1, 3), bool))
    np.testing.assert_array_equal(out, labels)


small_images = st.tuples(st.integers(1, 12), st.integers(1, 12)).flatmap(
    lambda hw: st.tuples(arrays(np.uint8, hw), arrays(np.int8, hw, elements=st.integers(0, 2)), arrays(bool, hw))
)
params_st = st.builds(
    lambda m, v: ClassParams(m, v, [1 / 3] * 3),
    st.lists(st.floats(0, 255), min_size=3, max_size=3),
    st.lists(st.floats(1, 2000), min_size=3, max_size=3),
)


@settings(max_examples=150, deadline=None)
@given(small_images, params_st, st.floats(0, 20))
def test_icm_matches_naive_and_never_raises_energy(data, params, beta):
    img, labels, roi = data
    out = icm_sweep(img, labels, params, beta, roi)
    np.testing.assert_array_equal(out, naive_icm(img, labels, params, beta, roi))
    before = total_energy(img, labels, params, beta, roi)
    after = total_energy(img, out, params, beta, roi)
    assert after <= before + 1e-9


@settings(max_examples=100, deadline=None)
@given(small_images, params_st, st.floats(0, 20), st.permutations([0, 1, 2]))
def test_energy_label_permutation(data, params, beta, perm):
    img, labels, roi = data
    perm = np.array(perm)
    inverse = np.argsort(perm)
    permuted = ClassParams(params.means[inverse], params.variances[inverse], params.weights[inverse])
    e1 = total_energy(img, labels, params, beta, roi)
    e2 = total_energy(img, perm[labels], permuted, beta, roi)
    assert e2 == pytest.approx(e1, rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(small_images, params_st, st.integers(-100, 100))
def test_data_energy_shift_invariance(data, params, shift):
    img, labels, roi = data
    shifted = img.astype(int) + shift
    if shifted.min() < 0 or shifted.max() > 255:
        return
    moved = ClassParams(params.means + shift, params.variances, params.weights)
    e1 = total_energy(img, labels, params, 0.0, roi)
    e2 = total_energy(shifted.astype(np.uint8), labels, moved, 0.0, roi)
    assert e2 == pytest.approx(e1, rel=1e-9, abs=1e-9)


def test_segment_two_pixel_converged_init():
    img = np.array([[10, 200]], np.uint8)
    init = np.array([[0, 2]], np.int8)
    res = segment(img, init, MrfConfig(), np.ones((1, 2), bool))
    assert len(res.trace) == 1
    np.testing.assert_array_equal(res.labels, init)


def test_segment_empty_roi():
    with pytest.raises(EmptyRegionError):
        segment(np.zeros((3, 3), np.uint8), np.zeros((3, 3), int), MrfConfig(), np.zeros((3, 3), bool))


@pytest.mark.parametrize("seed", range(3))
def test_segment_recovers_three_gaussians(seed):
    img, truth = three_gaussian_phantom(seed)
    roi = np.ones_like(truth, bool)
    init = initialize_labels(img, ThresholdSet((80, 170)), roi)
    res = segment(img, init, MrfConfig(), roi)
    assert np.mean(res.labels == truth) >= 0.95
    assert all(b <= a + 1e-9 for a, b in zip(res.trace, res.trace[1:]))


@pytest.mark.parametrize("seed", range(3))
def test_segment_beta_zero_is_pixelwise_ml(seed):
    img, _ = three_gaussian_phantom(seed, sigma=25)
    roi = np.ones_like(img, bool)
    roi[:5] = False
    init = initialize_labels(img, ThresholdSet((80, 170)), roi)
    res = segment(img, init, MrfConfig(beta=0.0), roi)
    np.testing.assert_array_equal(res.labels, gaussian_ml_labels(img, res.params, roi))
