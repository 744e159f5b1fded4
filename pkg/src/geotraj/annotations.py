"""SpotGEO-style annotation JSON.

A document is a JSON array of records::

    {"sequence_id": 1, "frame": 1, "num_objects": 2,
     "object_coords": [[502.1, 237.5], [490.0, 120.25]],
     "provenance": ["detected", "interpolated"]}

Frames are 1-based on disk and 0-based in memory. ``num_objects`` and
``provenance`` are optional when reading; ``provenance`` is only written when
some point was not detected directly.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .errors import AnnotationError
from .model import Point2D, Provenance, SequenceDetections


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _parse_record(idx: int, rec: Any) -> tuple[int, int, list[Point2D]]:
    if not isinstance(rec, dict):
        raise AnnotationError(f"record {idx}: expected an object, got {type(rec).__name__}")
    for key in ("sequence_id", "frame", "object_coords"):
        if key not in rec:
            raise AnnotationError(f"record {idx}: missing field '{key}'")
    sid, frame, coords = rec["sequence_id"], rec["frame"], rec["object_coords"]
    if not _is_int(sid):
        raise AnnotationError(f"record {idx}: sequence_id must be an integer")
    if not _is_int(frame) or frame < 1:
        raise AnnotationError(f"record {idx}: frame must be an integer >= 1")
    if not isinstance(coords, list):
        raise AnnotationError(f"record {idx}: object_coords must be a list")
    prov = rec.get("provenance")
    if prov is not None and (not isinstance(prov, list) or len(prov) != len(coords)):
        raise AnnotationError(f"record {idx}: provenance must be a list parallel to object_coords")
    if "num_objects" in rec and rec["num_objects"] != len(coords):
        raise AnnotationError(
            f"record {idx}: num_objects={rec['num_objects']} but {len(coords)} coordinates"
        )
    points = []
    for k, xy in enumerate(coords):
        if not (isinstance(xy, list) and len(xy) == 2 and all(_is_number(v) for v in xy)):
            raise AnnotationError(f"record {idx}: object_coords[{k}] is not a numeric [x, y] pair")
        try:
            tag = Provenance(prov[k]) if prov is not None else Provenance.DETECTED
        except ValueError:
            raise AnnotationError(f"record {idx}: unknown provenance {prov[k]!r}") from None
        points.append(Point2D(xy[0], xy[1], tag))
    return sid, frame - 1, points


def parse_annotations(text: str | bytes) -> list[SequenceDetections]:
    """Group records by sequence; missing frames become empty frames."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise AnnotationError("annotation document must be a JSON array")
    grouped: dict[int, dict[int, tuple[int, list[Point2D]]]] = {}
    for idx, rec in enumerate(doc):
        sid, frame, points = _parse_record(idx, rec)
        frames = grouped.setdefault(sid, {})
        if frame in frames:
            raise AnnotationError(
                f"records {frames[frame][0]} and {idx} both describe sequence {sid} frame {frame + 1}"
            )
        frames[frame] = (idx, points)
    return [
        SequenceDetections.from_points(
            sid, max(frames) + 1, {f: pts for f, (_, pts) in frames.items()}
        )
        for sid, frames in sorted(grouped.items())
    ]


def to_records(seqs: list[SequenceDetections]) -> list[dict]:
    records = []
    for seq in sorted(seqs, key=lambda s: s.sequence_id):
        for fd in seq.frames:
            rec: dict[str, Any] = {
                "sequence_id": seq.sequence_id,
                "frame": fd.frame + 1,
                "num_objects": len(fd.points),
                "object_coords": [[p.x, p.y] for p in fd.points],
            }
            if any(p.provenance is not Provenance.DETECTED for p in fd.points):
                rec["provenance"] = [p.provenance.value for p in fd.points]
            records.append(rec)
    return records


def write_annotations(seqs: list[SequenceDetections]) -> str:
    """Serialise every frame, empty ones included; floats keep full precision."""
    return json.dumps(to_records(seqs), indent=1)
