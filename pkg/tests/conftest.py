import math
from dataclasses import replace

import numpy as np
import pytest

from ctlesion.phantom import Lesion, PhantomSpec


def direct_entropy_score(counts, cuts) -> float:
    """Plain-python Kapur sum; independent of the library's vectorised paths."""
    total = sum(int(c) for c in counts)
    edges = [-1, *cuts, 255]
    score = 0.0
    for lo, hi in zip(edges, edges[1:]):
        cls = [int(c) / total for c in counts[lo + 1 : hi + 1]]
        w = sum(cls)
        if w == 0:
            continue
        score -= sum((p / w) * math.log(p / w) for p in cls if p > 0)
    return score


def naive_erode(mask):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for r in range(h):
        for c in range(w):
            out[r, c] = all(
                0 <= r + dr < h and 0 <= c + dc < w and mask[r + dr, c + dc]
                for dr in (-1, 0, 1)
                for dc in (-1, 0, 1)
            )
    return out


def naive_dilate(mask):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for r in range(h):
        for c in range(w):
            out[r, c] = any(
                0 <= r + dr < h and 0 <= c + dc < w and mask[r + dr, c + dc]
                for dr in (-1, 0, 1)
                for dc in (-1, 0, 1)
            )
    return out


def gaussian_ml_labels(img, params, roi):
    """Per-pixel argmin of the Gaussian negative log-likelihood (ties -> lowest index)."""
    x = img.astype(float)[..., None]
    mu = np.asarray(params.means)
    var = np.asarray(params.variances)
    nll = (x - mu) ** 2 / (2 * var) + 0.5 * np.log(2 * np.pi * var)
    labels = np.argmin(nll, axis=-1).astype(np.int8)
    labels[~roi] = 0
    return labels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_phantom_spec(rng: np.random.Generator) -> PhantomSpec:
    """Default anatomy with one or two lesions of random size, place and brightness."""
    base = PhantomSpec()
    lesions = []
    for _ in range(rng.integers(1, 3)):
        lung = base.lung_fields[rng.integers(2)]
        r = float(rng.uniform(5, 12))
        # any centre inside the ellipse shrunk by rho keeps the rho-disc inside the lung
        rho = r + 2.5
        ang, rad = rng.uniform(0, 2 * np.pi), np.sqrt(rng.uniform())
        cx = lung.cx + (lung.rx - rho) * rad * np.cos(ang)
        cy = lung.cy + (lung.ry - rho) * rad * np.sin(ang)
        lesions.append(Lesion(cx, cy, r, intensity=float(rng.uniform(130, 180))))
    return replace(base, lesions=tuple(lesions), seed=int(rng.integers(2**63)))


# Acceptance summary: one line per test marked ``acceptance(n, label)``,
# printed at the end of the run.  Tests may attach a ``detail`` via
# ``record_property``.
_acceptance_lines: list[tuple[int, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, label = marker.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if rep.passed else "FAIL"
    _acceptance_lines.append((number, f"criterion {number:2d} {status}  {label}" + (f"  [{detail}]" if detail else "")))


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)
