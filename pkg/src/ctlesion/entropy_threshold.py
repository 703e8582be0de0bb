"""Multilevel Shannon (Kapur) entropy thresholding.

The objective is the sum of within-class Shannon entropies of the
class-normalised histogram.  It is maximised either exhaustively (the
reference oracle, k <= 3) or with a firefly swarm whose random term is a
Gaussian (Brownian) step with geometrically decaying scale.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, OracleScopeError
from .image_core import LEVELS, Histogram, as_gray, as_mask

CUT_MIN = 1
CUT_MAX = LEVELS - 2


@dataclass(frozen=True)
class ThresholdSet:
    """Strictly increasing integer cuts in [1, 254]; class c spans (t_c, t_{c+1}]."""

    cuts: tuple[int, ...]

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cuts)
        if len(cuts) < 1:
            raise ValueError("need at least one cut")
        if any(c < CUT_MIN or c > CUT_MAX for c in cuts):
            raise ValueError(f"cuts must lie in [{CUT_MIN}, {CUT_MAX}]: {cuts}")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError(f"cuts must be strictly increasing: {cuts}")
        object.__setattr__(self, "cuts", cuts)

    @property
    def k(self) -> int:
        return len(self.cuts)

    def bands(self) -> list[tuple[int, int]]:
        """Inclusive intensity range of every class."""
        edges = (-1,) + self.cuts + (LEVELS - 1,)
        return [(lo + 1, hi) for lo, hi in zip(edges, edges[1:])]

    def classify(self, values) -> np.ndarray:
        """Class index of each intensity: I <= t1 -> 0, t1 < I <= t2 -> 1, ..."""
        return np.searchsorted(np.asarray(self.cuts), np.asarray(values), side="left")


@dataclass(frozen=True)
class FireflyParams:
    """Swarm settings.

    ``gamma = 0.01`` gives an attraction length of about ten grey levels, so
    the swarm keeps several clusters instead of collapsing onto the first
    bright firefly.  ``polish_starts`` is the number of best distinct cut
    vectors refined by an integer hill climb after the last iteration (0 runs
    the bare swarm).
    """

    population: int = 20
    iterations: int = 100
    beta0: float = 1.0
    gamma: float = 0.01
    alpha0: float = 30.0
    alpha_decay: float = 0.97
    seed: int = 0
    polish_starts: int = 5

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.beta0 <= 0 or self.gamma <= 0:
            raise ValueError("beta0 and gamma must be positive")
        if not 0 < self.alpha_decay <= 1:
            raise ValueError("alpha_decay must lie in (0, 1]")
        if self.alpha0 < 0:
            raise ValueError("alpha0 must be non-negative")
        if self.polish_starts < 0:
            raise ValueError("polish_starts must be non-negative")


@dataclass
class FireflyResult:
    thresholds: ThresholdSet
    score: float
    trace: list[float]

    def write_trace_csv(self, path) -> None:
        write_trace_csv(path, self.trace, "best_score")


def write_trace_csv(path, values, column: str) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", column])
        for i, v in enumerate(values, start=1):
            writer.writerow([i, repr(float(v))])


def _class_entropy(p: np.ndarray) -> float:
    w = p.sum()
    if w <= 0:
        return 0.0
    q = p[p > 0] / w
    return float(-(q * np.log(q)).sum())


def shannon_objective(hist: Histogram, t: ThresholdSet) -> float:
    """Sum over classes of the Shannon entropy of the normalised class histogram.

    Empty classes contribute 0.
    """
    p = hist.probabilities
    return sum(_class_entropy(p[lo : hi + 1]) for lo, hi in t.bands())


class _PrefixEntropy:
    """O(1) class entropies from prefix sums: H = ln w - (sum p ln p) / w."""

    def __init__(self, hist: Histogram):
        p = hist.probabilities
        plogp = np.zeros(LEVELS)
        nz = p > 0
        plogp[nz] = p[nz] * np.log(p[nz])
        self.P = np.concatenate([[0.0], np.cumsum(p)])
        self.Q = np.concatenate([[0.0], np.cumsum(plogp)])
        self.N = np.concatenate([[0], np.cumsum(hist.counts)])

    def entropy(self, lo, hi):
        """Entropy of bins lo..hi inclusive (broadcasts over arrays)."""
        w = self.P[hi + 1] - self.P[lo]
        s = self.Q[hi + 1] - self.Q[lo]
        occupied = (self.N[hi + 1] - self.N[lo]) > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.log(w) - s / w
        return np.where(occupied, h, 0.0)


def exhaustive_optimal(hist: Histogram, k: int = 2) -> tuple[ThresholdSet, float]:
    """Global maximiser of :func:`shannon_objective` over all k-cut vectors.

    Ties go to the lexicographically smallest cuts.  Candidate scores are
    computed from prefix sums; every candidate within 1e-9 of the best is
    re-scored with the direct summation before the final pick.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > 3:
        raise OracleScopeError("exhaustive search supports k <= 3")
    pe = _PrefixEntropy(hist)
    cuts = np.arange(CUT_MIN, CUT_MAX + 1)
    top = LEVELS - 1

    if k == 1:
        scores = pe.entropy(0, cuts) + pe.entropy(cuts + 1, top)
        grid = cuts[:, None]
    elif k == 2:
        a, b = np.meshgrid(cuts, cuts, indexing="ij")
        valid = a < b
        a, b = a[valid], b[valid]
        scores = pe.entropy(0, a) + pe.entropy(a + 1, b) + pe.entropy(b + 1, top)
        grid = np.stack([a, b], axis=1)
    else:
        parts, grids = [], []
        b, c = np.meshgrid(cuts, cuts, indexing="ij")
        valid = b < c
        b, c = b[valid], c[valid]
        tail = pe.entropy(b + 1, c) + pe.entropy(c + 1, top)
        for a in cuts:
            sel = b > a
            parts.append(pe.entropy(0, a) + pe.entropy(a + 1, b[sel]) + tail[sel])
            grids.append(np.stack([np.full(sel.sum(), a), b[sel], c[sel]], axis=1))
        scores = np.concatenate(parts)
        grid = np.concatenate(grids)

    near = np.flatnonzero(scores >= scores.max() - 1e-9)
    best_set, best_score = None, -np.inf
    # grid rows are generated in lexicographic order, so strict > keeps the smallest
    for idx in near:
        t = ThresholdSet(tuple(grid[idx]))
        s = shannon_objective(hist, t)
        if s > best_score:
            best_set, best_score = t, s
    return best_set, best_score


def positions_to_cuts(x: np.ndarray) -> ThresholdSet:
    """Round a real position to a valid ThresholdSet (sort, clamp, separate by +1)."""
    c = np.clip(np.rint(np.sort(x)), CUT_MIN, CUT_MAX).astype(int)
    k = len(c)
    for i in range(1, k):
        if c[i] <= c[i - 1]:
            c[i] = c[i - 1] + 1
    for i in range(k - 1, -1, -1):
        c[i] = min(c[i], CUT_MAX - (k - 1 - i))
        if i + 1 < k and c[i] >= c[i + 1]:
            c[i] = c[i + 1] - 1
    return ThresholdSet(tuple(c))


def fa_optimize(hist: Histogram, k: int = 2, params: FireflyParams = FireflyParams()) -> FireflyResult:
    """Maximise the entropy objective with a Brownian-walk firefly swarm.

    Every firefly i moves toward each firefly j that was brighter at the
    start of the iteration::

        x_i += beta0 * exp(-gamma * |x_j - x_i|^2) * (x_j - x_i) + alpha_t * N(0, I)

    with ``alpha_t = alpha0 * alpha_decay**t``.  The brightest firefly (no
    brighter partner) takes a pure random step.  After moving, positions are
    clamped to [1, 254] and sorted.  The best cuts seen so far are kept, so
    the per-iteration trace is non-decreasing.

    With ``polish_starts > 0`` the best distinct cut vectors evaluated during
    the run are then refined by steepest ascent over the integer neighbours
    (each cut moved by -1, 0 or +1); the trace gets one extra entry holding
    the polished score.
    """
    if k < 1 or k > CUT_MAX - CUT_MIN + 1:
        raise ValueError("invalid number of cuts")
    rng = np.random.default_rng(params.seed)
    n = params.population
    cache: dict[tuple[int, ...], float] = {}

    def brightness(x: np.ndarray) -> tuple[ThresholdSet, float]:
        t = positions_to_cuts(x)
        if t.cuts not in cache:
            cache[t.cuts] = shannon_objective(hist, t)
        return t, cache[t.cuts]

    pos = np.sort(rng.uniform(CUT_MIN, CUT_MAX, size=(n, k)), axis=1)
    evals = [brightness(x) for x in pos]
    light = np.array([s for _, s in evals])
    best_i = int(np.argmax(light))
    best_t, best_s = evals[best_i]

    trace = []
    for it in range(params.iterations):
        alpha = params.alpha0 * params.alpha_decay**it
        snapshot = pos.copy()
        new = pos.copy()
        for i in range(n):
            brighter = np.flatnonzero(light > light[i])
            if brighter.size == 0:
                new[i] += alpha * rng.standard_normal(k)
                continue
            for j in brighter:
                diff = snapshot[j] - new[i]
                beta = params.beta0 * np.exp(-params.gamma * float(diff @ diff))
                new[i] += beta * diff + alpha * rng.standard_normal(k)
        pos = np.sort(np.clip(new, CUT_MIN, CUT_MAX), axis=1)
        evals = [brightness(x) for x in pos]
        light = np.array([s for _, s in evals])
        i = int(np.argmax(light))
        if light[i] > best_s:
            best_t, best_s = evals[i]
        trace.append(best_s)

    if params.polish_starts:
        starts = sorted(cache, key=lambda c: (-cache[c], c))[: params.polish_starts]
        for start in starts:
            cuts, score = _hill_climb(start, lambda c: _cached_score(c, cache, hist))
            if score > best_s:
                best_t, best_s = ThresholdSet(cuts), score
        trace.append(best_s)
    return FireflyResult(best_t, best_s, trace)


def _cached_score(cuts: tuple[int, ...], cache: dict, hist: Histogram) -> float:
    if cuts not in cache:
        cache[cuts] = shannon_objective(hist, ThresholdSet(cuts))
    return cache[cuts]


def _hill_climb(cuts: tuple[int, ...], score_fn) -> tuple[tuple[int, ...], float]:
    """Steepest ascent on the integer lattice of valid cut vectors."""
    k = len(cuts)
    moves = [m for m in itertools.product((-1, 0, 1), repeat=k) if any(m)]
    current, current_s = cuts, score_fn(cuts)
    while True:
        step = None
        for m in moves:
            cand = tuple(c + d for c, d in zip(current, m))
            if cand[0] < CUT_MIN or cand[-1] > CUT_MAX or any(b <= a for a, b in zip(cand, cand[1:])):
                continue
            s = score_fn(cand)
            if s > current_s:
                step, current_s = cand, s
        if step is None:
            return current, current_s
        current = step


def apply_thresholds(img, t: ThresholdSet, roi) -> np.ndarray:
    """Replace every roi pixel by the (rounded) mean intensity of its class.

    Class means come from the roi histogram; an empty class is represented by
    its lower bound.  Pixels outside the roi become 0.
    """
    img = as_gray(img)
    roi = as_mask(roi, img.shape)
    if img.shape != roi.shape:
        raise DimensionError("roi shape mismatch")
    counts = np.bincount(img[roi], minlength=LEVELS)
    levels = np.arange(LEVELS)
    reps = []
    for lo, hi in t.bands():
        n = counts[lo : hi + 1].sum()
        if n == 0:
            reps.append(float(lo))
        else:
            reps.append(float((counts[lo : hi + 1] * levels[lo : hi + 1]).sum() / n))
    lut = np.rint(np.asarray(reps)).astype(np.uint8)
    out = lut[t.classify(img)]
    out[~roi] = 0
    return out

