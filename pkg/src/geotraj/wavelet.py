"""Single-frame candidate detector built on a one-level Haar transform.

The detail sub-bands are amplified by a fixed gain, the image is rebuilt and
then thresholded; connected bright regions become intensity-weighted
centroids. This is a classical stand-in for a learned detector, so any other
source of per-frame points can replace it upstream of completion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InputError
from .model import Point2D


@dataclass(frozen=True)
class Subbands:
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def __post_init__(self) -> None:
        shapes = {np.shape(b) for b in (self.ll, self.lh, self.hl, self.hh)}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2:
            raise InputError(f"sub-band planes must share one 2-D shape, got {shapes}")


@dataclass(frozen=True)
class DetectorConfig:
    hf_gain: float = 2.0
    intensity_threshold: float = 0.6
    min_component_area: int = 2
    max_candidates_per_frame: int = 30

    def __post_init__(self) -> None:
        if self.hf_gain < 1:
            raise InputError("hf_gain must be >= 1")
        if not 0 < self.intensity_threshold < 1:
            raise InputError("intensity_threshold must lie in (0, 1)")
        if self.min_component_area < 1 or self.max_candidates_per_frame < 1:
            raise InputError("min_component_area and max_candidates_per_frame must be >= 1")


def dwt2_haar(img: np.ndarray) -> Subbands:
    """Orthonormal single-level 2-D Haar transform of an even-sized image."""
    x = np.asarray(img, dtype=float)
    if x.ndim != 2 or x.shape[0] % 2 or x.shape[1] % 2:
        raise InputError(f"dwt2_haar needs a 2-D image with even sides, got {x.shape}")
    a, b = x[0::2, 0::2], x[0::2, 1::2]
    c, d = x[1::2, 0::2], x[1::2, 1::2]
    return Subbands(
        ll=(a + b + c + d) / 2,
        lh=(a + b - c - d) / 2,
        hl=(a - b + c - d) / 2,
        hh=(a - b - c + d) / 2,
    )


def idwt2_haar(sb: Subbands) -> np.ndarray:
    ll, lh, hl, hh = (np.asarray(p, dtype=float) for p in (sb.ll, sb.lh, sb.hl, sb.hh))
    h, w = ll.shape
    out = np.empty((2 * h, 2 * w))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2
    out[0::2, 1::2] = (ll + lh - hl - hh) / 2
    out[1::2, 0::2] = (ll - lh + hl - hh) / 2
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2
    return out


def enhance(sb: Subbands, cfg: DetectorConfig | None = None) -> Subbands:
    g = (cfg or DetectorConfig()).hf_gain
    return Subbands(sb.ll, sb.lh * g, sb.hl * g, sb.hh * g)


def enhance_image(img: np.ndarray, cfg: DetectorConfig | None = None) -> np.ndarray:
    """Gain-boosted reconstruction; odd sides are edge-padded, then cropped back."""
    x = np.asarray(img, dtype=float)
    h, w = x.shape
    padded = np.pad(x, ((0, h % 2), (0, w % 2)), mode="edge")
    return idwt2_haar(enhance(dwt2_haar(padded), cfg))[:h, :w]


def detect_candidates(img: np.ndarray, cfg: DetectorConfig | None = None) -> list[Point2D]:
    """Centroids of bright components, strongest peak first."""
    cfg = cfg or DetectorConfig()
    rec = enhance_image(img, cfg)
    lo, hi = rec.min(), rec.max()
    if not hi > lo:
        return []
    norm = (rec - lo) / (hi - lo)
    labels, count = ndimage.label(norm > cfg.intensity_threshold, structure=np.ones((3, 3)))
    found = []
    for k, region in enumerate(ndimage.find_objects(labels), start=1):
        rows, cols = np.nonzero(labels[region] == k)
        if rows.size < cfg.min_component_area:
            continue
        rows = rows + region[0].start
        cols = cols + region[1].start
        weights = norm[rows, cols]
        cx = float(weights @ cols / weights.sum())
        cy = float(weights @ rows / weights.sum())
        found.append((-float(weights.max()), cy, cx))
    found.sort()
    return [Point2D(cx, cy) for _, cy, cx in found[: cfg.max_candidates_per_frame]]
