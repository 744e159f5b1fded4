"""Sequential trajectory completion.

Three stages run over one observation sequence:

1. gap interpolation: consecutive non-empty frames a short gap apart are
   Hungarian-matched and the matched pairs are linearly interpolated into the
   frames between them;
2. temporal-support filtering: a point survives if enough frames around it
   contain a detection within ``support_tau``;
3. progressive refinement: every frame is visited in order and offered
   candidates, conservative ones first (two-sided interpolation or one-sided
   constant-velocity extrapolation) and then per-track least-squares fits.
   A candidate is only inserted when the frame has no point near it already,
   so targets that are present are never duplicated.

Distance gates come from an adaptive ``ThresholdSet`` estimated from the
matching statistics of the sequence itself. ``run_completion`` repeats the
three stages until the output stops changing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .assignment import match_distances, match_points
from .errors import InputError, InsufficientDataError
from .model import FrameDetections, Point2D, Provenance, SequenceDetections, Track

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompletionConfig:
    window_radius: int = 2
    support_tau: float = 10.0
    support_ratio_min: float = 0.3
    max_interp_gap: int = 2
    stat_k: float = 2.0
    comp_scale: float = 1.5
    agg_scale: float = 3.0
    dedup_radius: float = 1.0
    ref_lookback: int = 3

    def __post_init__(self) -> None:
        for name in ("window_radius", "max_interp_gap", "ref_lookback"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be >= 1")
        for name in ("support_tau", "dedup_radius"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be > 0")
        if not 0.0 <= self.support_ratio_min <= 1.0:
            raise InputError("support_ratio_min must lie in [0, 1]")
        if self.stat_k < 0:
            raise InputError("stat_k must be >= 0")
        if not 1.0 <= self.comp_scale <= self.agg_scale:
            raise InputError("need 1 <= comp_scale <= agg_scale")


@dataclass(frozen=True)
class ThresholdSet:
    t_stat: float
    t_comp: float
    t_agg: float

    def __post_init__(self) -> None:
        if not 0 < self.t_stat <= self.t_comp <= self.t_agg:
            raise InputError(
                f"thresholds must satisfy 0 < t_stat <= t_comp <= t_agg, got {self}"
            )

    @classmethod
    def from_base(cls, t_stat: float, cfg: CompletionConfig) -> ThresholdSet:
        return cls(t_stat, cfg.comp_scale * t_stat, cfg.agg_scale * t_stat)


def _insert(points: list[Point2D], candidate: Point2D, radius: float) -> bool:
    if any(candidate.distance(p) <= radius for p in points):
        return False
    points.append(candidate)
    return True


def _lerp(p: Point2D, q: Point2D, alpha: float, provenance: Provenance) -> Point2D:
    return Point2D(p.x + alpha * (q.x - p.x), p.y + alpha * (q.y - p.y), provenance)


def _pairwise(items: list[int]) -> Iterable[tuple[int, int]]:
    return zip(items, items[1:])


# -- thresholds ---------------------------------------------------------------


def consecutive_match_distances(seq: SequenceDetections) -> list[float]:
    """Ungated Hungarian match distances between consecutive non-empty frames."""
    out: list[float] = []
    for f1, f2 in _pairwise(seq.non_empty_frames()):
        out.extend(match_distances(seq.points(f1), seq.points(f2)))
    return out


def adaptive_t_stat(
    distances: Iterable[float], max_track_distance: float | None, cfg: CompletionConfig
) -> float:
    """``min(mean + stat_k * std, max_track_distance)`` with population std.

    Falls back to ``cfg.support_tau`` with fewer than two distances or when
    the result is not strictly positive. A missing or zero track distance
    leaves the statistical bound unclipped.
    """
    d = np.asarray(list(distances), dtype=float)
    if d.size < 2:
        return cfg.support_tau
    t = float(d.mean() + cfg.stat_k * d.std())
    if max_track_distance is not None and max_track_distance > 0:
        t = min(t, float(max_track_distance))
    return t if t > 0 else cfg.support_tau


def estimate_thresholds(seq: SequenceDetections, cfg: CompletionConfig | None = None) -> ThresholdSet:
    cfg = cfg or CompletionConfig()
    distances = consecutive_match_distances(seq)
    # Tracks for the displacement bound are chained with the fallback gates,
    # since the adaptive ones are what is being estimated.
    tracks = build_tracks(seq, ThresholdSet.from_base(cfg.support_tau, cfg))
    longest = max((t.displacement() for t in tracks if len(t) >= 2), default=None)
    th = ThresholdSet.from_base(adaptive_t_stat(distances, longest, cfg), cfg)
    logger.debug("sequence %s: thresholds %s", seq.sequence_id, th)
    return th


# -- stage 1: gap interpolation -----------------------------------------------


def interpolate_gaps(
    seq: SequenceDetections,
    cfg: CompletionConfig | None = None,
    thresholds: ThresholdSet | None = None,
) -> SequenceDetections:
    """Fill frames between consecutive non-empty frames at most ``max_interp_gap`` apart."""
    cfg = cfg or CompletionConfig()
    th = thresholds or estimate_thresholds(seq, cfg)
    work = seq.point_map()
    changed = False
    for f1, f2 in _pairwise(seq.non_empty_frames()):
        gap = f2 - f1
        if not 1 < gap <= cfg.max_interp_gap:
            continue
        p_pts, q_pts = seq.points(f1), seq.points(f2)
        for i, j in match_points(p_pts, q_pts, gate=th.t_stat):
            for f in range(f1 + 1, f2):
                alpha = (f - f1) / gap
                pt = _lerp(p_pts[i], q_pts[j], alpha, Provenance.INTERPOLATED)
                changed |= _insert(work[f], pt, cfg.dedup_radius)
    return seq.replace_points(work) if changed else seq


# -- stage 2: temporal-support filtering ---------------------------------------


def support_ratio(seq: SequenceDetections, frame: int, point: Point2D, cfg: CompletionConfig) -> float:
    """Fraction of window frames holding a detection within ``support_tau``."""
    w = cfg.window_radius
    lo, hi = max(0, frame - w), min(seq.frame_count - 1, frame + w)
    window = [g for g in range(lo, hi + 1) if g != frame]
    if not window:
        return 0.0
    supported = sum(
        1 for g in window if any(point.distance(q) <= cfg.support_tau for q in seq.points(g))
    )
    return supported / len(window)


def support_filter(seq: SequenceDetections, cfg: CompletionConfig | None = None) -> SequenceDetections:
    """Drop points whose support ratio is below ``support_ratio_min``.

    Sequences with three or fewer non-empty frames are returned untouched.
    Ratios are evaluated against the input state, in a single pass.
    """
    cfg = cfg or CompletionConfig()
    if len(seq.non_empty_frames()) <= 3:
        return seq
    kept: dict[int, list[Point2D]] = {}
    removed = 0
    for fd in seq.frames:
        kept[fd.frame] = [
            p for p in fd.points if support_ratio(seq, fd.frame, p, cfg) >= cfg.support_ratio_min
        ]
        removed += len(fd.points) - len(kept[fd.frame])
    if not removed:
        return seq
    logger.debug("sequence %s: support filter removed %d points", seq.sequence_id, removed)
    return seq.replace_points(kept)


# -- stage 3 building blocks ---------------------------------------------------


def motion_vector(ref: Point2D, check: Point2D, i: int) -> tuple[float, float]:
    """Per-frame displacement from ``check`` to ``ref``, which lies ``i`` frames later."""
    if i < 1:
        raise InputError(f"frame interval must be >= 1, got {i}")
    return ((ref.x - check.x) / i, (ref.y - check.y) / i)


def single_end_extrapolate(ref: Point2D, v: tuple[float, float], delta_f: int) -> Point2D:
    """Constant-velocity step of ``delta_f`` frames; negative steps go backwards."""
    return Point2D(ref.x + v[0] * delta_f, ref.y + v[1] * delta_f, Provenance.EXTRAPOLATED)


def dual_end_interpolate(
    prev: FrameDetections, next: FrameDetections, f: int, th: ThresholdSet
) -> list[Point2D]:
    if not prev.frame < f < next.frame:
        raise InputError(f"frame {f} is not strictly between {prev.frame} and {next.frame}")
    alpha = (f - prev.frame) / (next.frame - prev.frame)
    return [
        _lerp(prev.points[i], next.points[j], alpha, Provenance.INTERPOLATED)
        for i, j in match_points(prev.points, next.points, gate=th.t_comp)
    ]


def build_tracks(seq: SequenceDetections, th: ThresholdSet) -> list[Track]:
    """Chain points across consecutive non-empty frames, gated at ``t_agg``.

    Every point ends up in exactly one track; unmatched points open new ones.
    """
    tracks: list[Track] = []
    open_tracks: dict[int, Track] = {}
    prev_frame: int | None = None
    for f in seq.non_empty_frames():
        pts = seq.points(f)
        links: dict[int, Track] = {}
        if prev_frame is not None:
            for i, j in match_points(seq.points(prev_frame), pts, gate=th.t_agg):
                links[j] = open_tracks[i]
        open_tracks = {}
        for j, p in enumerate(pts):
            track = links.get(j)
            if track is None:
                track = Track(len(tracks), sequence_id=seq.sequence_id)
                tracks.append(track)
            track.append(f, p)
            open_tracks[j] = track
        prev_frame = f
    return tracks


def regression_complete(track: Track, f: int) -> Point2D:
    """Ordinary least-squares position of ``track`` at frame ``f``.

    x(frame) and y(frame) are fitted independently.
    """
    if len(track.nodes) < 2:
        raise InsufficientDataError(f"track {track.track_id} has {len(track.nodes)} node(s), need 2")
    if f in track.frames:
        raise InputError(f"track {track.track_id} already has a node at frame {f}")
    t = np.array(track.frames, dtype=float)
    xy = np.array([p.xy for _, p in track.nodes], dtype=float)
    dt = t - t.mean()
    slope = dt @ (xy - xy.mean(axis=0)) / (dt @ dt)
    fitted = xy.mean(axis=0) + slope * (f - t.mean())
    return Point2D(fitted[0], fitted[1], Provenance.REGRESSED)


# -- stage 3: progressive refinement -------------------------------------------


def _nearest_non_empty(work: Mapping[int, list[Point2D]], f: int, step: int, lookback: int, n: int) -> int | None:
    for k in range(1, lookback + 1):
        g = f + step * k
        if not 0 <= g < n:
            return None
        if work[g]:
            return g
    return None


def _anchor_velocities(
    work: Mapping[int, list[Point2D]],
    anchor: int,
    direction: int,
    th: ThresholdSet,
    cfg: CompletionConfig,
    n: int,
) -> dict[int, tuple[float, float]]:
    """Averaged motion vector for each anchor point that has a valid match.

    ``direction`` is +1 when the gap lies after the anchor (reference frames
    precede it) and -1 for gaps before the anchor (references follow it).
    Vectors are always expressed forward in time.
    """
    anchor_pts = work[anchor]
    sums: dict[int, list[float]] = {}
    for step in range(1, cfg.ref_lookback + 1):
        c = anchor - direction * step
        if not 0 <= c < n or not work[c]:
            continue
        check_pts = work[c]
        for i, j in match_points(anchor_pts, check_pts, gate=th.t_comp):
            if direction > 0:
                vx, vy = motion_vector(anchor_pts[i], check_pts[j], step)
            else:
                vx, vy = motion_vector(check_pts[j], anchor_pts[i], step)
            acc = sums.setdefault(i, [0.0, 0.0, 0])
            acc[0] += vx
            acc[1] += vy
            acc[2] += 1
    return {i: (sx / k, sy / k) for i, (sx, sy, k) in sums.items()}


def _regression_candidates(tracks: list[Track], f: int, th: ThresholdSet) -> list[Point2D]:
    out = []
    for track in tracks:
        if len(track) < 2 or track.point_at(f) is not None:
            continue
        p = regression_complete(track, f)
        nearest = min(track.nodes, key=lambda node: abs(node[0] - f))[1]
        if p.distance(nearest) < th.t_agg:
            out.append(p)
    return out


def progressive_refine(
    seq: SequenceDetections,
    cfg: CompletionConfig | None = None,
    thresholds: ThresholdSet | None = None,
) -> SequenceDetections:
    """Fill targets missing from individual frames.

    Frames are visited in order and earlier fills serve as references for
    later ones. In each frame the conservative step runs first: two-sided
    interpolation when non-empty frames exist within ``ref_lookback`` on both
    sides, else constant-velocity extrapolation from the one side available
    (both gated at ``t_comp``). Tracks lacking the frame are then completed by
    least squares, gated at ``t_agg``. A candidate is a missed target only if
    the frame has no point within the gate that produced it; accepted
    candidates count as existing points for the ones that follow.
    """
    cfg = cfg or CompletionConfig()
    n = seq.frame_count
    if n == 0 or seq.num_points() == 0:
        return seq
    th = thresholds or estimate_thresholds(seq, cfg)
    tracks = build_tracks(seq, th)
    work = seq.point_map()
    comp_radius = max(cfg.dedup_radius, th.t_comp)
    agg_radius = max(cfg.dedup_radius, th.t_agg)
    changed = False
    for f in range(n):
        prev = _nearest_non_empty(work, f, -1, cfg.ref_lookback, n)
        nxt = _nearest_non_empty(work, f, +1, cfg.ref_lookback, n)
        conservative: list[Point2D] = []
        if prev is not None and nxt is not None:
            conservative = dual_end_interpolate(
                FrameDetections(prev, tuple(work[prev])), FrameDetections(nxt, tuple(work[nxt])), f, th
            )
        elif prev is not None or nxt is not None:
            anchor, direction = (prev, +1) if prev is not None else (nxt, -1)
            velocities = _anchor_velocities(work, anchor, direction, th, cfg, n)
            conservative = [
                single_end_extrapolate(work[anchor][i], v, f - anchor)
                for i, v in sorted(velocities.items())
            ]
        for p in conservative:
            changed |= _insert(work[f], p, comp_radius)
        for p in _regression_candidates(tracks, f, th):
            changed |= _insert(work[f], p, agg_radius)
    return seq.replace_points(work) if changed else seq


def completion_pass(seq: SequenceDetections, cfg: CompletionConfig | None = None) -> SequenceDetections:
    """One sweep: thresholds, gap interpolation, support filtering, refinement."""
    cfg = cfg or CompletionConfig()
    th = estimate_thresholds(seq, cfg)
    out = interpolate_gaps(seq, cfg, th)
    out = support_filter(out, cfg)
    return progressive_refine(out, cfg, th)


def run_completion(
    seq: SequenceDetections, cfg: CompletionConfig | None = None, max_passes: int = 8
) -> SequenceDetections:
    """Repeat ``completion_pass`` until the sequence no longer changes.

    Stopping at a fixed point makes the result idempotent: removals can
    withdraw support from neighbours and fills shift the threshold
    statistics, so a single sweep is not.
    """
    cfg = cfg or CompletionConfig()
    current = seq
    for _ in range(max_passes):
        nxt = completion_pass(current, cfg)
        if nxt == current:
            return current
        current = nxt
    logger.warning("sequence %s: no fixed point after %d passes", seq.sequence_id, max_passes)
    return current
