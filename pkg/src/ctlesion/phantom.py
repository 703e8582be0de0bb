"""Seeded synthetic axial-slice phantoms with exact lung and lesion ground truth.

Layout: a bright body ring around a soft-tissue interior that holds two dark
elliptical lung fields; lesion discs sit inside the lungs.  Pixel (row, col)
has its centre at ``(x, y) = (col + 0.5, row + 0.5)`` and belongs to a shape
when that centre lies inside or on the analytic boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SpecError
from .image_core import Histogram


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    rx: float
    ry: float


@dataclass(frozen=True)
class Lesion:
    cx: float
    cy: float
    radius: float
    intensity: float = 160.0
    sigma: float = 12.0


@dataclass(frozen=True)
class BodyRing:
    cx: float = 128.0
    cy: float = 128.0
    inner_radius: float = 108.0
    outer_radius: float = 120.0
    intensity: float = 230.0
    sigma: float = 5.0


def _default_lungs() -> tuple[Ellipse, Ellipse]:
    return (Ellipse(84.0, 124.0, 30.0, 58.0), Ellipse(172.0, 124.0, 30.0, 58.0))


def _default_lesions() -> tuple[Lesion, ...]:
    return (Lesion(80.0, 110.0, 14.0), Lesion(176.0, 150.0, 10.0))


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 256
    height: int = 256
    body_ring: BodyRing = field(default_factory=BodyRing)
    tissue_intensity: float = 200.0
    tissue_sigma: float = 5.0
    lung_fields: tuple[Ellipse, Ellipse] = field(default_factory=_default_lungs)
    lung_intensity: float = 40.0
    lung_sigma: float = 8.0
    lesions: tuple[Lesion, ...] = field(default_factory=_default_lesions)
    seed: int = 0

    def scaled(self, factor: float) -> "PhantomSpec":
        """Same anatomy on a grid ``factor`` times larger; intensities and noise unchanged."""
        ring = self.body_ring
        return replace(
            self,
            width=round(self.width * factor),
            height=round(self.height * factor),
            body_ring=replace(ring, cx=ring.cx * factor, cy=ring.cy * factor,
                              inner_radius=ring.inner_radius * factor,
                              outer_radius=ring.outer_radius * factor),
            lung_fields=tuple(Ellipse(e.cx * factor, e.cy * factor, e.rx * factor, e.ry * factor)
                              for e in self.lung_fields),
            lesions=tuple(replace(les, cx=les.cx * factor, cy=les.cy * factor, radius=les.radius * factor)
                          for les in self.lesions),
        )


def disc_mask(shape, cx, cy, radius) -> np.ndarray:
    return ellipse_mask(shape, Ellipse(cx, cy, radius, radius))


def ellipse_mask(shape, e: Ellipse) -> np.ndarray:
    h, w = shape
    y = np.arange(h)[:, None] + 0.5
    x = np.arange(w)[None, :] + 0.5
    return ((x - e.cx) / e.rx) ** 2 + ((y - e.cy) / e.ry) ** 2 <= 1.0


def _validate(spec: PhantomSpec) -> None:
    if spec.width < 1 or spec.height < 1:
        raise SpecError("phantom dimensions must be positive")
    ring = spec.body_ring
    intensities = [ring.intensity, spec.tissue_intensity, spec.lung_intensity]
    intensities += [les.intensity for les in spec.lesions]
    if any(not 0 <= v <= 255 for v in intensities):
        raise SpecError("intensities must lie in [0, 255]")
    sigmas = [ring.sigma, spec.tissue_sigma, spec.lung_sigma] + [les.sigma for les in spec.lesions]
    if any(s < 0 for s in sigmas):
        raise SpecError("noise sigmas must be non-negative")
    if not 0 < ring.inner_radius < ring.outer_radius:
        raise SpecError("body ring needs 0 < inner_radius < outer_radius")
    if len(spec.lung_fields) != 2:
        raise SpecError("exactly two lung fields are required")
    if any(e.rx <= 0 or e.ry <= 0 for e in spec.lung_fields):
        raise SpecError("lung radii must be positive")
    if any(les.radius <= 0 for les in spec.lesions):
        raise SpecError("lesion radii must be positive")


def generate_phantom(spec: PhantomSpec = PhantomSpec()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Render ``spec``; returns ``(image, lung_truth, lesion_truth)``.

    Lesions must sit inside a lung with at least one pixel of lung around
    them (their disc grown by one pixel stays within the lung fields).
    """
    _validate(spec)
    shape = (spec.height, spec.width)
    ring = spec.body_ring
    body = disc_mask(shape, ring.cx, ring.cy, ring.outer_radius)
    interior = disc_mask(shape, ring.cx, ring.cy, ring.inner_radius)
    lung = np.zeros(shape, dtype=bool)
    for e in spec.lung_fields:
        lung |= ellipse_mask(shape, e)
    if (lung & ~interior).any():
        raise SpecError("lung fields must lie inside the body ring")

    mean = np.zeros(shape)
    sigma = np.zeros(shape)
    mean[body], sigma[body] = ring.intensity, ring.sigma
    mean[interior], sigma[interior] = spec.tissue_intensity, spec.tissue_sigma
    mean[lung], sigma[lung] = spec.lung_intensity, spec.lung_sigma

    lesion = np.zeros(shape, dtype=bool)
    for les in spec.lesions:
        disc = disc_mask(shape, les.cx, les.cy, les.radius)
        if not disc.any():
            raise SpecError(f"lesion at ({les.cx}, {les.cy}) covers no pixel")
        if (disc_mask(shape, les.cx, les.cy, les.radius + 1.0) & ~lung).any():
            raise SpecError(f"lesion at ({les.cx}, {les.cy}) is not enclosed by a lung field")
        mean[disc], sigma[disc] = les.intensity, les.sigma
        lesion |= disc

    rng = np.random.default_rng(spec.seed)
    noisy = mean + sigma * rng.standard_normal(shape)
    img = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    return img, lung, lesion


def trimodal_histogram(rng: np.random.Generator, n_pixels: int = 65536) -> Histogram:
    """Random three-mode intensity histogram for optimiser benchmarks.

    Mode centres are drawn in [20, 235] at least 35 levels apart, widths in
    [4, 15] and weights from a Dirichlet(3, 3, 3); samples are rounded and
    clipped to 8 bits.
    """
    centres = np.sort(rng.uniform(20, 235, size=3))
    while np.min(np.diff(centres)) < 35:
        centres = np.sort(rng.uniform(20, 235, size=3))
    widths = rng.uniform(4, 15, size=3)
    weights = rng.dirichlet(np.ones(3) * 3)
    counts_per_mode = rng.multinomial(n_pixels, weights)
    samples = np.concatenate([rng.normal(c, w, size=n) for c, w, n in zip(centres, widths, counts_per_mode)])
    samples = np.clip(np.rint(samples), 0, 255).astype(int)
    return Histogram(np.bincount(samples, minlength=256))
