"""Command-line entry point.

Subcommands: ``simulate``, ``complete``, ``score``, ``detect``, ``label`` and
``render``. Every run writes a JSON manifest (input/output SHA-256 digests,
resolved configuration, timing) next to its primary output unless
``--manifest`` says otherwise.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from . import __version__
from .annotations import parse_annotations, write_annotations
from .completion import CompletionConfig, run_completion
from .errors import ConfigError, GeoTrajError, InputError
from .imageio import read_gray, scan_frames, write_gray, write_mask
from .labeling import DEFAULT_HALF_WIDTH, make_shape_label
from .model import FrameDetections, SequenceDetections
from .overlay import render_overlay
from .scoring import EvalConfig, score_dataset
from .simulator import CorruptionSpec, SceneSpec, corrupt_scene, generate_scene, render_frames
from .wavelet import DetectorConfig, detect_candidates

logger = logging.getLogger("geotraj")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

CONFIG_SECTIONS = {
    "completion": CompletionConfig,
    "eval": EvalConfig,
    "detector": DetectorConfig,
}


class UsageError(GeoTrajError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# -- configuration ----------------------------------------------------------


def _field_types() -> dict[str, tuple[str, type]]:
    out = {}
    for section, cls in CONFIG_SECTIONS.items():
        for f in dataclasses.fields(cls):
            default = f.default
            out[f.name] = (section, float if default is None else type(default))
    return out


def _coerce(key: str, value: Any, kind: type) -> Any:
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind is float:
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config value for '{key}' must be {kind.__name__}, got {value!r}") from None
    return value


def resolve_config(path: str | None, overrides: Sequence[str] = ()) -> dict[str, dict[str, Any]]:
    """Dataclass defaults, then the flat JSON file, then ``KEY=VALUE`` overrides."""
    types = _field_types()
    flat: dict[str, Any] = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        flat.update(doc)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        flat[key.strip()] = raw
    unknown = sorted(set(flat) - set(types))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    sections: dict[str, dict[str, Any]] = {s: {} for s in CONFIG_SECTIONS}
    for key, value in flat.items():
        section, kind = types[key]
        sections[section][key] = _coerce(key, value, kind)
    for section, cls in CONFIG_SECTIONS.items():
        try:
            sections[section] = dataclasses.asdict(cls(**sections[section]))
        except InputError as exc:
            raise ConfigError(str(exc)) from exc
    return sections


# -- manifest -----------------------------------------------------------------


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _digests(paths: Iterable[Path]) -> dict[str, str]:
    out = {}
    for p in paths:
        if p.is_dir():
            for f in sorted(q for q in p.rglob("*") if q.is_file()):
                out[str(f)] = _digest(f)
        elif p.is_file():
            out[str(p)] = _digest(p)
    return out


def write_manifest(
    path: Path, command: str, argv: Sequence[str], config: dict, inputs: Iterable[Path],
    outputs: Iterable[Path], started: float,
) -> None:
    manifest = {
        "tool": "geotraj",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "config": config,
        "inputs": _digests(inputs),
        "outputs": _digests(outputs),
        "timing": {"started_unix": started, "elapsed_s": time.time() - started},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- helpers ------------------------------------------------------------------


def _read_annotations(path: str) -> list[SequenceDetections]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_annotations(text)


def _write_text(path: str | Path, text: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    return p


def _parallel_map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _complete_one(args: tuple[SequenceDetections, CompletionConfig]) -> SequenceDetections:
    return run_completion(*args)


def _detect_one(args: tuple[str, DetectorConfig]) -> list:
    path, cfg = args
    return detect_candidates(read_gray(path), cfg)


# -- subcommands ----------------------------------------------------------------
# Each returns (input paths, output paths, default manifest path).


def cmd_simulate(ns, cfg):
    scene = SceneSpec(
        n_sequences=ns.sequences,
        frames_per_sequence=ns.frames,
        width=ns.width,
        height=ns.height,
        tracks_per_sequence=tuple(ns.tracks),
        speed_range=tuple(ns.speed),
        seed=ns.seed,
    )
    cor = CorruptionSpec(
        p_drop=ns.p_drop, clutter_rate=ns.clutter_rate, jitter_sigma=ns.jitter,
        width=ns.width, height=ns.height,
    )
    truth, _ = generate_scene(scene)
    detections = corrupt_scene(truth, cor, seed=ns.seed + 1)
    outputs = [
        _write_text(ns.truth, write_annotations(truth)),
        _write_text(ns.detections, write_annotations(detections)),
    ]
    if ns.frames_dir:
        root = Path(ns.frames_dir)
        for seq in truth:
            seq_dir = root / str(seq.sequence_id)
            seq_dir.mkdir(parents=True, exist_ok=True)
            frames = render_frames(seq, ns.width, ns.height, seed=ns.seed + seq.sequence_id)
            for f, img in enumerate(frames):
                write_gray(seq_dir / f"{f + 1}.png", img)
        outputs.append(root)
    return [], outputs, Path(ns.detections)


def cmd_complete(ns, cfg):
    seqs = _read_annotations(ns.input)
    ccfg = CompletionConfig(**cfg["completion"])
    done = _parallel_map(_complete_one, [(s, ccfg) for s in seqs], ns.jobs)
    out = _write_text(ns.output, write_annotations(done))
    return [Path(ns.input)], [out], out


def cmd_score(ns, cfg):
    pred = _read_annotations(ns.pred)
    truth = _read_annotations(ns.truth)
    report = score_dataset(pred, truth, EvalConfig(**cfg["eval"]))
    print(report.summary())
    outputs = []
    if ns.output:
        outputs.append(_write_text(ns.output, json.dumps(report.to_dict(), indent=1) + "\n"))
    manifest = outputs[0] if outputs else Path(ns.pred)
    return [Path(ns.pred), Path(ns.truth)], outputs, manifest


def cmd_detect(ns, cfg):
    layout = scan_frames(ns.frames_dir)
    if not layout:
        raise InputError(f"no <sequence>/<frame>.png images under {ns.frames_dir}")
    dcfg = DetectorConfig(**cfg["detector"])
    jobs = [(str(p), dcfg) for frames in layout.values() for p in frames.values()]
    found = iter(_parallel_map(_detect_one, jobs, ns.jobs))
    seqs = []
    for sid, frames in layout.items():
        points = {f: next(found) for f in frames}
        seqs.append(SequenceDetections.from_points(sid, max(frames) + 1, points))
    out = _write_text(ns.output, write_annotations(seqs))
    return [Path(ns.frames_dir)], [out], out


def cmd_label(ns, cfg):
    layout = scan_frames(ns.frames_dir)
    seqs = {s.sequence_id: s for s in _read_annotations(ns.annotations)}
    root = Path(ns.output_dir)
    written = 0
    for sid, frames in layout.items():
        for f, path in frames.items():
            img = read_gray(path)
            centers = [p.xy for p in seqs[sid].points(f)] if sid in seqs else []
            mask = make_shape_label(img, centers, m=ns.half_width)
            (root / str(sid)).mkdir(parents=True, exist_ok=True)
            write_mask(root / str(sid) / f"{f + 1}.png", mask)
            written += 1
    if not written:
        raise InputError(f"no <sequence>/<frame>.png images under {ns.frames_dir}")
    return [Path(ns.frames_dir), Path(ns.annotations)], [root], root / "manifest.json"


def cmd_render(ns, cfg):
    pred = {s.sequence_id: s for s in _read_annotations(ns.pred)}
    truth = {s.sequence_id: s for s in _read_annotations(ns.truth)}
    missing = sorted(set(pred) ^ set(truth))
    if missing:
        raise InputError(f"sequence ids present on one side only: {missing}")
    images = scan_frames(ns.frames_dir) if ns.frames_dir else {}
    ecfg = EvalConfig(**cfg["eval"])
    root = Path(ns.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    for sid in sorted(truth):
        n = max(pred[sid].frame_count, truth[sid].frame_count)
        for f in range(n):
            img_path = images.get(sid, {}).get(f)
            svg = render_overlay(
                FrameDetections(f, pred[sid].points(f)),
                FrameDetections(f, truth[sid].points(f)),
                ecfg,
                image=read_gray(img_path) if img_path else None,
                width=ns.width,
                height=ns.height,
            )
            _write_text(root / f"{sid}_{f + 1}.svg", svg)
    return [Path(ns.pred), Path(ns.truth)], [root], root / "manifest.json"


COMMANDS = {
    "simulate": cmd_simulate,
    "complete": cmd_complete,
    "score": cmd_score,
    "detect": cmd_detect,
    "label": cmd_label,
    "render": cmd_render,
}


def _common_options(defaults: bool) -> argparse.ArgumentParser:
    # Shared flags are accepted before or after the subcommand; the
    # subcommand copies use SUPPRESS so they only override when given.
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", default=d(None), help="flat JSON config file")
    p.add_argument("--set", action="append", default=d([]), metavar="KEY=VALUE",
                   help="override one config field (repeatable)")
    p.add_argument("--seed", type=int, default=d(0), help="random seed (u64)")
    p.add_argument("--jobs", type=int, default=d(1), help="parallel worker processes")
    p.add_argument("--manifest", default=d(None), help="run manifest path")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geotraj", description=__doc__.splitlines()[0], parents=[_common_options(True)])
    parser.add_argument("--version", action="version", version=f"geotraj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common_options(False)]

    p = sub.add_parser("simulate", parents=common, help="synthetic truth + corrupted detections")
    p.add_argument("--truth", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--frames-dir", help="also render PNG frames here")
    p.add_argument("--sequences", type=int, default=10)
    p.add_argument("--frames", type=int, default=5)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--tracks", type=int, nargs=2, default=[1, 3], metavar=("MIN", "MAX"))
    p.add_argument("--speed", type=float, nargs=2, default=[0.5, 4.0], metavar=("MIN", "MAX"))
    p.add_argument("--p-drop", type=float, default=0.2)
    p.add_argument("--clutter-rate", type=float, default=2.0)
    p.add_argument("--jitter", type=float, default=0.3)

    p = sub.add_parser("complete", parents=common, help="run trajectory completion")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("score", parents=common, help="F1 / MSE of predictions against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output", help="JSON report path")

    p = sub.add_parser("detect", parents=common, help="wavelet candidate detection on PNG frames")
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("label", parents=common, help="centroid annotations to PNG shape masks")
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--half-width", type=int, default=DEFAULT_HALF_WIDTH)

    p = sub.add_parser("render", parents=common, help="SVG overlays of predictions vs truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--frames-dir")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.time()
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.jobs < 1 or not 0 <= ns.seed < 2**64:
            raise UsageError("--jobs must be >= 1 and --seed must fit in u64")
        cfg = resolve_config(ns.config, ns.set)
        inputs, outputs, manifest = COMMANDS[ns.command](ns, cfg)
        if ns.manifest:
            manifest = Path(ns.manifest)
        elif manifest.name != "manifest.json":
            manifest = manifest.with_name(manifest.name + ".manifest.json")
        config_record = {**cfg, "seed": ns.seed, "jobs": ns.jobs}
        write_manifest(manifest, ns.command, argv, config_record, inputs, outputs, started)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
