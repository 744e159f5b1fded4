"""Synthetic scenes: constant-velocity ground truth plus a corruption model.

Each sequence draws from its own child of ``numpy.random.SeedSequence(seed)``
so sequences are reproducible independently of one another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .model import Point2D, SequenceDetections, Track


@dataclass(frozen=True)
class SceneSpec:
    n_sequences: int = 1
    frames_per_sequence: int = 5
    width: int = 640
    height: int = 480
    tracks_per_sequence: tuple[int, int] = (1, 3)
    speed_range: tuple[float, float] = (0.5, 4.0)
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_sequences, self.frames_per_sequence, self.width, self.height) < 1:
            raise InputError("scene sizes must be positive")
        lo, hi = self.tracks_per_sequence
        if not 1 <= lo <= hi:
            raise InputError(f"invalid tracks_per_sequence {self.tracks_per_sequence}")
        smin, smax = self.speed_range
        if not 0 <= smin <= smax:
            raise InputError(f"invalid speed_range {self.speed_range}")
        limit = min(self.width, self.height) / self.frames_per_sequence
        if smax >= limit:
            raise InputError(f"max speed {smax} px/frame must be below {limit:g}")


@dataclass(frozen=True)
class CorruptionSpec:
    p_drop: float = 0.2
    clutter_rate: float = 2.0
    jitter_sigma: float = 0.3
    width: int = 640
    height: int = 480

    def validate(self) -> None:
        if not 0 <= self.p_drop < 1:
            raise InputError("p_drop must lie in [0, 1)")
        if self.clutter_rate < 0 or self.jitter_sigma < 0:
            raise InputError("clutter_rate and jitter_sigma must be >= 0")


@dataclass
class CorruptedScene:
    detections: list[SequenceDetections]
    # clutter[s][f][k] is True when point k of frame f in sequence s is clutter
    clutter: list[dict[int, list[bool]]] = field(default_factory=list)
    n_truth: int = 0
    n_dropped: int = 0


def linear_track(
    track_id: int,
    start: tuple[float, float],
    velocity: tuple[float, float],
    frames: int,
    sequence_id: int | None = None,
) -> Track:
    track = Track(track_id, sequence_id=sequence_id)
    for f in range(frames):
        track.append(f, Point2D(start[0] + velocity[0] * f, start[1] + velocity[1] * f))
    return track


def _random_track(rng: np.random.Generator, spec: SceneSpec, track_id: int, sequence_id: int) -> Track:
    span = spec.frames_per_sequence - 1
    speed = rng.uniform(*spec.speed_range)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    vx, vy = speed * math.cos(angle), speed * math.sin(angle)
    # start range keeps every frame inside [0, width-1] x [0, height-1]
    x0 = rng.uniform(max(0.0, -vx * span), min(spec.width - 1, spec.width - 1 - vx * span))
    y0 = rng.uniform(max(0.0, -vy * span), min(spec.height - 1, spec.height - 1 - vy * span))
    return linear_track(track_id, (x0, y0), (vx, vy), spec.frames_per_sequence, sequence_id)


def generate_scene(spec: SceneSpec | None = None) -> tuple[list[SequenceDetections], list[Track]]:
    """Ground-truth sequences (ids from 1) and the tracks that produced them."""
    spec = spec or SceneSpec()
    spec.validate()
    truth: list[SequenceDetections] = []
    tracks: list[Track] = []
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_sequences)
    for s, child in enumerate(children):
        rng = np.random.default_rng(child)
        sequence_id = s + 1
        lo, hi = spec.tracks_per_sequence
        seq_tracks = [
            _random_track(rng, spec, len(tracks) + k, sequence_id)
            for k in range(int(rng.integers(lo, hi + 1)))
        ]
        tracks.extend(seq_tracks)
        points: dict[int, list[Point2D]] = {}
        for tr in seq_tracks:
            for f, p in tr.nodes:
                points.setdefault(f, []).append(p)
        truth.append(SequenceDetections.from_points(sequence_id, spec.frames_per_sequence, points))
    return truth, tracks


def corrupt_scene_detailed(
    truth: list[SequenceDetections], cor: CorruptionSpec | None = None, seed: int = 0
) -> CorruptedScene:
    """Drop, jitter and clutter ``truth``; also report which points are clutter."""
    cor = cor or CorruptionSpec()
    cor.validate()
    result = CorruptedScene(detections=[])
    children = np.random.SeedSequence(seed).spawn(len(truth))
    for seq, child in zip(truth, children):
        rng = np.random.default_rng(child)
        points: dict[int, list[Point2D]] = {}
        flags: dict[int, list[bool]] = {}
        for fd in seq.frames:
            kept: list[tuple[Point2D, bool]] = []
            for p in fd.points:
                result.n_truth += 1
                if rng.random() < cor.p_drop:
                    result.n_dropped += 1
                    continue
                dx, dy = rng.normal(0.0, cor.jitter_sigma, size=2) if cor.jitter_sigma else (0.0, 0.0)
                kept.append((Point2D(p.x + dx, p.y + dy), False))
            for _ in range(int(rng.poisson(cor.clutter_rate))):
                x, y = rng.uniform(0, cor.width - 1), rng.uniform(0, cor.height - 1)
                kept.append((Point2D(x, y), True))
            order = rng.permutation(len(kept))
            points[fd.frame] = [kept[k][0] for k in order]
            flags[fd.frame] = [kept[k][1] for k in order]
        result.detections.append(seq.replace_points(points))
        result.clutter.append(flags)
    return result


def corrupt_scene(
    truth: list[SequenceDetections], cor: CorruptionSpec | None = None, seed: int = 0
) -> list[SequenceDetections]:
    return corrupt_scene_detailed(truth, cor, seed).detections


def render_frames(
    seq: SequenceDetections,
    width: int = 640,
    height: int = 480,
    amplitude: float = 60.0,
    blob_sigma: float = 1.0,
    background: float = 10.0,
    sigma_bg: float = 2.0,
    seed: int = 0,
) -> list[np.ndarray]:
    """Grayscale frames with Gaussian blobs at every point plus sensor noise."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    frames = []
    for fd in seq.frames:
        img = np.full((height, width), background, dtype=float)
        for p in fd.points:
            r = int(math.ceil(4 * blob_sigma))
            x0, x1 = max(0, int(p.x) - r), min(width, int(p.x) + r + 2)
            y0, y1 = max(0, int(p.y) - r), min(height, int(p.y) + r + 2)
            if x0 >= x1 or y0 >= y1:
                continue
            dx = xx[y0:y1, x0:x1] - p.x
            dy = yy[y0:y1, x0:x1] - p.y
            img[y0:y1, x0:x1] += amplitude * np.exp(-(dx**2 + dy**2) / (2 * blob_sigma**2))
        if sigma_bg > 0:
            img += rng.normal(0.0, sigma_bg, size=img.shape)
        frames.append(np.clip(img, 0.0, None))
    return frames
