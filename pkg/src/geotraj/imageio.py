"""8-bit grayscale PNG helpers and the ``<root>/<sequence>/<frame>.png`` layout."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image


def read_gray(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=float)


def write_gray(path: str | Path, img: np.ndarray) -> None:
    arr = np.clip(np.rint(np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def write_mask(path: str | Path, mask: np.ndarray) -> None:
    write_gray(path, np.asarray(mask, dtype=bool) * 255)


_NUMBERED = re.compile(r"^(\d+)$")


def scan_frames(root: str | Path) -> dict[int, dict[int, Path]]:
    """``{sequence_id: {frame (0-based): path}}`` from numbered dirs and files.

    File stems are 1-based frame numbers, as in SpotGEO.
    """
    out: dict[int, dict[int, Path]] = {}
    for seq_dir in sorted(Path(root).iterdir()):
        if not seq_dir.is_dir() or not _NUMBERED.match(seq_dir.name):
            continue
        frames = {
            int(p.stem) - 1: p
            for p in seq_dir.glob("*.png")
            if _NUMBERED.match(p.stem) and int(p.stem) >= 1
        }
        if frames:
            out[int(seq_dir.name)] = dict(sorted(frames.items()))
    return out
