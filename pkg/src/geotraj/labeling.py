"""Centroid annotations to binary shape labels.

Around each annotated centre a ``(2m+1)``-pixel square window (clipped at the
image border) is min-max normalised, thresholded at 0.5 and the union of the
results is dilated with a radius-1 disc, which bridges one-pixel breaks in
faint streaks.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import InputError

BINARIZE_LEVEL = 0.5
DEFAULT_HALF_WIDTH = 3


def window_bounds(shape: tuple[int, int], center: tuple[int, int], m: int) -> tuple[int, int, int, int]:
    """``(row0, row1, col0, col1)`` of the clipped window, end-exclusive."""
    h, w = shape
    x, y = center
    if not (0 <= x < w and 0 <= y < h):
        raise InputError(f"center {center} outside {w}x{h} image")
    if m < 1:
        raise InputError(f"half-width m must be >= 1, got {m}")
    return max(0, y - m), min(h, y + m + 1), max(0, x - m), min(w, x + m + 1)


def normalize_window(img: np.ndarray, center: tuple[int, int], m: int = DEFAULT_HALF_WIDTH) -> np.ndarray:
    """Min-max normalised copy of the window around ``center`` (x, y).

    A flat window maps to all zeros.
    """
    img = np.asarray(img, dtype=float)
    r0, r1, c0, c1 = window_bounds(img.shape, center, m)
    win = img[r0:r1, c0:c1]
    lo, hi = win.min(), win.max()
    if hi <= lo:
        return np.zeros_like(win)
    return (win - lo) / (hi - lo)


def binarize(window: np.ndarray) -> np.ndarray:
    return np.asarray(window) > BINARIZE_LEVEL


def disc_offsets(radius: int) -> list[tuple[int, int]]:
    """Integer ``(dy, dx)`` offsets with ``dy^2 + dx^2 <= radius^2``."""
    r = int(radius)
    return [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1) if dy * dy + dx * dx <= r * r]


def dilate_circular(mask: np.ndarray, radius: int = 1) -> np.ndarray:
    if radius < 1:
        raise InputError(f"radius must be >= 1, got {radius}")
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    padded = np.pad(mask, radius)
    out = np.zeros_like(mask)
    for dy, dx in disc_offsets(radius):
        out |= padded[radius - dy : radius - dy + h, radius - dx : radius - dx + w]
    return out


def make_shape_label(
    img: np.ndarray,
    centers: Iterable[tuple[int, int]],
    m: int = DEFAULT_HALF_WIDTH,
    radius: int = 1,
) -> np.ndarray:
    """Image-sized boolean label for a set of integer ``(x, y)`` centres."""
    img = np.asarray(img, dtype=float)
    centers = [(int(round(x)), int(round(y))) for x, y in centers]
    h, w = img.shape
    outside = [c for c in centers if not (0 <= c[0] < w and 0 <= c[1] < h)]
    if outside:
        raise InputError(f"centers outside {w}x{h} image: {outside}")
    canvas = np.zeros((h, w), dtype=bool)
    for c in centers:
        r0, r1, c0, c1 = window_bounds(img.shape, c, m)
        canvas[r0:r1, c0:c1] |= binarize(normalize_window(img, c, m))
    # dilation distributes over union, so one pass equals per-centre dilation
    return dilate_circular(canvas, radius)
