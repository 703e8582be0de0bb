"""Pixel containers, histograms and binary PGM/PPM raster I/O.

Images are 2-D ``uint8`` numpy arrays indexed ``[row, col]`` (row-major, so
``width = shape[1]``); masks and label fields are 2-D arrays of the same
shape with ``bool`` and small-integer dtypes respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DepthError, DimensionError, EmptyRegionError, FormatError, SizeError

LEVELS = 256
_WHITESPACE = b" \t\n\r\v\f"


def as_gray(img) -> np.ndarray:
    """Validate and return ``img`` as a 2-D uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.integer) and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("intensities must lie in [0, 255]")
        if not np.issubdtype(arr.dtype, np.integer):
            raise TypeError(f"expected integer intensities, got {arr.dtype}")
        arr = arr.astype(np.uint8)
    return arr


def as_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.asarray(mask, dtype=bool)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D mask, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionError(f"mask shape {arr.shape} does not match image shape {tuple(shape)}")
    return arr


@dataclass(frozen=True)
class Histogram:
    """Intensity counts over ``LEVELS`` bins."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (LEVELS,) or (counts < 0).any():
            raise ValueError("histogram needs 256 non-negative counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        total = self.total
        if total == 0:
            return np.zeros(LEVELS)
        return self.counts / total


def compute_histogram(img, roi=None) -> Histogram:
    """Tally intensities of ``img``, restricted to ``roi`` when given."""
    img = as_gray(img)
    if roi is None:
        values = img.ravel()
    else:
        roi = as_mask(roi, img.shape)
        if not roi.any():
            raise EmptyRegionError("histogram roi is empty")
        values = img[roi]
    return Histogram(np.bincount(values, minlength=LEVELS))


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return data[start:pos], pos


def _parse_header(data: bytes, magic: bytes) -> tuple[int, int, int]:
    if data[:2] != magic:
        raise FormatError(f"expected magic {magic!r}, got {data[:2]!r}")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        if not tok.isdigit():
            raise FormatError(f"non-numeric header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError("image dimensions must be positive")
    if maxval != 255:
        raise DepthError(f"only 8-bit rasters (maxval 255) are supported, got {maxval}")
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError("missing whitespace after maxval")
    return width, height, pos + 1


def load_pgm(data: bytes) -> np.ndarray:
    """Decode a binary (P5) 8-bit PGM byte stream."""
    width, height, start = _parse_header(bytes(data), b"P5")
    need = width * height
    payload = data[start : start + need]
    if len(payload) < need:
        raise SizeError(f"expected {need} pixel bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def save_pgm(img) -> bytes:
    img = as_gray(img)
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def read_pgm(path) -> np.ndarray:
    return load_pgm(Path(path).read_bytes())


def write_pgm(path, img) -> None:
    Path(path).write_bytes(save_pgm(img))


def mask_to_gray(mask) -> np.ndarray:
    return np.where(as_mask(mask), 255, 0).astype(np.uint8)


def read_mask(path) -> np.ndarray:
    """Ground-truth masks are label images: any nonzero pixel is foreground."""
    return read_pgm(path) > 0


def write_mask(path, mask) -> None:
    write_pgm(path, mask_to_gray(mask))


def boundary(mask) -> np.ndarray:
    """Mask pixels with a 4-neighbour outside the mask (or on the image edge)."""
    mask = as_mask(mask)
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~interior


def save_overlay_ppm(img, mask) -> bytes:
    """P6 rendering of ``img`` with the boundary of ``mask`` drawn in pure red."""
    img = as_gray(img)
    edge = boundary(as_mask(mask, img.shape))
    rgb = np.repeat(img[:, :, None], 3, axis=2)
    rgb[edge] = (255, 0, 0)
    h, w = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes()
