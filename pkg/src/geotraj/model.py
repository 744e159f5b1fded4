"""Point, frame, sequence and track containers shared by every stage.

All containers are immutable; pipeline stages return new objects.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InputError


class Provenance(str, enum.Enum):
    DETECTED = "detected"
    INTERPOLATED = "interpolated"
    EXTRAPOLATED = "extrapolated"
    REGRESSED = "regressed"


@dataclass(frozen=True)
class Point2D:
    """Image-plane position in pixels (x = column, y = row)."""

    x: float
    y: float
    provenance: Provenance = Provenance.DETECTED

    def __post_init__(self) -> None:
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"non-finite point coordinates ({self.x}, {self.y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def distance(self, other: Point2D) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def as_point(obj: Point2D | Sequence[float]) -> Point2D:
    if isinstance(obj, Point2D):
        return obj
    x, y = obj
    return Point2D(x, y)


@dataclass(frozen=True)
class FrameDetections:
    frame: int
    points: tuple[Point2D, ...] = ()

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise InputError(f"frame index must be >= 0, got {self.frame}")
        object.__setattr__(self, "points", tuple(as_point(p) for p in self.points))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


@dataclass(frozen=True)
class SequenceDetections:
    """Dense per-frame point sets for one observation sequence.

    ``frames[f].frame == f`` for every f; empty frames are stored as empty
    ``FrameDetections`` so ``frame_count`` always equals ``len(frames)``.
    """

    sequence_id: int
    frames: tuple[FrameDetections, ...] = ()

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        for i, fd in enumerate(frames):
            if fd.frame != i:
                raise InputError(
                    f"sequence {self.sequence_id}: frame slot {i} holds frame {fd.frame}"
                )
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_points(
        cls,
        sequence_id: int,
        frame_count: int,
        points: Mapping[int, Iterable[Point2D | Sequence[float]]] | None = None,
    ) -> SequenceDetections:
        points = points or {}
        bad = [f for f in points if not 0 <= f < frame_count]
        if bad:
            raise InputError(f"frame indices {bad} outside [0, {frame_count})")
        return cls(
            sequence_id,
            tuple(FrameDetections(f, tuple(points.get(f, ()))) for f in range(frame_count)),
        )

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def points(self, frame: int) -> tuple[Point2D, ...]:
        if 0 <= frame < len(self.frames):
            return self.frames[frame].points
        return ()

    def non_empty_frames(self) -> list[int]:
        return [fd.frame for fd in self.frames if fd.points]

    def num_points(self) -> int:
        return sum(len(fd.points) for fd in self.frames)

    def point_map(self) -> dict[int, list[Point2D]]:
        """Mutable copy of the frame contents, keyed by every frame index."""
        return {fd.frame: list(fd.points) for fd in self.frames}

    def replace_points(self, points: Mapping[int, Iterable[Point2D]]) -> SequenceDetections:
        return SequenceDetections.from_points(self.sequence_id, self.frame_count, points)


@dataclass
class Track:
    """Cross-frame identity: nodes are ``(frame, point)`` with increasing frames."""

    track_id: int
    nodes: list[tuple[int, Point2D]] = field(default_factory=list)
    sequence_id: int | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def frames(self) -> list[int]:
        return [f for f, _ in self.nodes]

    def point_at(self, frame: int) -> Point2D | None:
        for f, p in self.nodes:
            if f == frame:
                return p
        return None

    def append(self, frame: int, point: Point2D) -> None:
        if self.nodes and frame <= self.nodes[-1][0]:
            raise InputError(
                f"track {self.track_id}: frame {frame} does not follow {self.nodes[-1][0]}"
            )
        self.nodes.append((frame, point))

    def displacement(self) -> float:
        """Straight-line distance between the first and last node."""
        if len(self.nodes) < 2:
            return 0.0
        return self.nodes[0][1].distance(self.nodes[-1][1])
