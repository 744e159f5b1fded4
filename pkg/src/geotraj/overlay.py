"""SVG overlays of predictions against ground truth.

Matched truths are blue, matched predictions green, unmatched predictions
(false positives) yellow and unmatched truths (false negatives) red.
"""

from __future__ import annotations

import base64
import io
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image

from .model import FrameDetections
from .scoring import EvalConfig, match_frame

COLORS = {
    "truth": "blue",
    "tp": "green",
    "fp": "yellow",
    "fn": "red",
}
_LEGEND = [
    ("truth", "ground truth"),
    ("tp", "true positive"),
    ("fp", "false positive"),
    ("fn", "false negative"),
]


def _png_data_uri(img: np.ndarray) -> str:
    arr = np.clip(np.rint(np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


def _circle(kind: str, x: float, y: float, r: float) -> str:
    color = COLORS[kind]
    fill = "none" if kind == "truth" else color
    return (
        f'<circle class="{kind}" cx="{x:.3f}" cy="{y:.3f}" r="{r:g}" '
        f'stroke="{color}" fill="{fill}" stroke-width="1"/>'
    )


def render_overlay(
    pred: FrameDetections,
    truth: FrameDetections,
    cfg: EvalConfig | None = None,
    image: np.ndarray | None = None,
    width: int = 640,
    height: int = 480,
    radius: float = 4.0,
) -> str:
    """SVG document with one circle per point; ``image`` sets the canvas when given."""
    cfg = cfg or EvalConfig()
    if image is not None:
        height, width = np.shape(image)
    fm = match_frame(pred, truth, cfg)
    matched_truth = {j for _, j in fm.matched}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>frame {truth.frame}</title>",
    ]
    if image is not None:
        parts.append(f'<image x="0" y="0" width="{width}" height="{height}" href="{_png_data_uri(image)}"/>')
    else:
        parts.append(f'<rect width="{width}" height="{height}" fill="black"/>')
    for j, p in enumerate(truth.points):
        parts.append(_circle("truth" if j in matched_truth else "fn", p.x, p.y, radius + 2))
    for i, _ in fm.matched:
        parts.append(_circle("tp", pred.points[i].x, pred.points[i].y, radius))
    for i in fm.unmatched_pred:
        parts.append(_circle("fp", pred.points[i].x, pred.points[i].y, radius))
    parts.append('<g class="legend" font-family="sans-serif" font-size="12">')
    for k, (kind, label) in enumerate(_LEGEND):
        y = 16 + 16 * k
        parts.append(f'<rect x="8" y="{y - 10}" width="10" height="10" fill="{COLORS[kind]}"/>')
        parts.append(f'<text x="24" y="{y}" fill="white">{escape(label)}</text>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
