"""Acceptance gate: one PASS/FAIL line per criterion, printed as each runs."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from geotraj.assignment import solve_assignment
from geotraj.completion import CompletionConfig, run_completion, support_filter
from geotraj.labeling import binarize, dilate_circular, normalize_window
from geotraj.model import Point2D
from geotraj.scoring import score_dataset
from geotraj.simulator import CorruptionSpec, SceneSpec, corrupt_scene, corrupt_scene_detailed, generate_scene
from geotraj.wavelet import dwt2_haar, idwt2_haar
from oracles import brute_force_assignment

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok

    return emit


def test_published_numbers_not_reproduced(report):
    readme = (ROOT / "README.md").read_text()
    ok = "not reproducible" in readme and "88.07" in readme and "90.14" in readme
    report(
        "published-figures note",
        ok,
        "published F1 88.07% / 90.14% and MSE 61958.1973 need the trained detector and the full "
        "dataset; README states they are not reproducible and the criteria below stand in",
    )
    assert ok


def test_assignment_optimality(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    solve_time = 0.0
    for _ in range(1000):
        m, n = rng.integers(1, 8, size=2)
        cost = rng.uniform(0, 100, size=(m, n))
        if rng.random() < 0.3:
            cost = np.round(cost / 25)  # frequent ties
        t0 = time.perf_counter()
        got = solve_assignment(cost)
        solve_time += time.perf_counter() - t0
        best, _ = brute_force_assignment(cost)
        worst = max(worst, abs(got.total_cost - best))
    ok = worst <= 1e-9 and solve_time < 10
    report("assignment optimality", ok, f"1000 matrices, max |cost - brute force| = {worst:.2e} (<= 1e-9), "
           f"solver time {solve_time:.2f}s (< 10s)")
    assert ok


def test_exact_linear_recovery(report):
    rng = np.random.default_rng(0)
    worst = 0.0
    missed = 0
    elapsed = 0.0
    for seed in range(200):
        (truth,), tracks = generate_scene(SceneSpec(seed=seed, tracks_per_sequence=(1, 3)))
        pts = truth.point_map()
        dropped = []
        for tr in tracks:
            f = int(rng.integers(1, 4))
            p = tr.point_at(f)
            pts[f].remove(p)
            dropped.append((f, p))
        seq = truth.replace_points(pts)
        t0 = time.perf_counter()
        out = run_completion(seq)
        elapsed += time.perf_counter() - t0
        for f, p in dropped:
            if not out.points(f):
                missed += 1
                continue
            worst = max(worst, min(p.distance(q) for q in out.points(f)))
    ok = missed == 0 and worst <= 1e-6 and elapsed < 5
    report("exact linear recovery", ok, f"200 scenes, {missed} unrestored, max error {worst:.2e}px (<= 1e-6), "
           f"{elapsed:.2f}s (< 5s)")
    assert ok


def test_noise_rejection(report):
    cfg = CompletionConfig()
    clutter = removed_clutter = true_removed = 0
    for seed in range(100):
        truth, _ = generate_scene(SceneSpec(seed=seed))
        scene = corrupt_scene_detailed(truth, CorruptionSpec(p_drop=0.0, clutter_rate=2.0), seed=seed)
        seq, flags = scene.detections[0], scene.clutter[0]
        if len(seq.non_empty_frames()) < 4:
            continue
        out = support_filter(seq, cfg)
        for fd in seq.frames:
            kept = set(out.points(fd.frame))
            for p, is_clutter in zip(fd.points, flags[fd.frame]):
                if is_clutter:
                    clutter += 1
                    removed_clutter += p not in kept
                else:
                    true_removed += p not in kept
    rate = removed_clutter / clutter
    ok = rate >= 0.9 and true_removed == 0
    report("noise rejection", ok, f"{removed_clutter}/{clutter} clutter removed ({rate:.2%}, >= 90%), "
           f"{true_removed} true points removed (== 0)")
    assert ok


def test_end_to_end_improvement(report):
    before, after = [], []
    t0 = time.perf_counter()
    for seed in range(100):
        truth, _ = generate_scene(SceneSpec(seed=seed))
        det = corrupt_scene(truth, CorruptionSpec(p_drop=0.2, clutter_rate=2.0, jitter_sigma=0.3), seed=seed)
        before.append(score_dataset(det, truth))
        after.append(score_dataset([run_completion(s) for s in det], truth))
    elapsed = time.perf_counter() - t0
    f1_b, f1_a = np.mean([r.f1 for r in before]), np.mean([r.f1 for r in after])
    mse_b, mse_a = np.mean([r.mse for r in before]), np.mean([r.mse for r in after])
    ok = f1_a - f1_b >= 0.05 and mse_a < mse_b and elapsed < 30
    report("end-to-end improvement", ok, f"mean F1 {f1_b:.4f} -> {f1_a:.4f} (+{100 * (f1_a - f1_b):.2f} pp, >= 5), "
           f"mean MSE {mse_b:.1f} -> {mse_a:.1f} (must drop), {elapsed:.2f}s (< 30s)")
    assert ok


def test_wavelet_round_trip(report):
    rng = np.random.default_rng(1)
    worst_rec = worst_energy = 0.0
    for _ in range(100):
        h, w = 2 * rng.integers(1, 33, size=2)
        x = rng.uniform(-500, 500, size=(h, w))
        sb = dwt2_haar(x)
        worst_rec = max(worst_rec, float(np.max(np.abs(idwt2_haar(sb) - x))))
        e_in = float(np.sum(x**2))
        e_sb = sum(float(np.sum(p**2)) for p in (sb.ll, sb.lh, sb.hl, sb.hh))
        worst_energy = max(worst_energy, abs(e_sb - e_in) / e_in)
    ok = worst_rec <= 1e-9 and worst_energy <= 1e-6
    report("wavelet round-trip", ok, f"100 images, max reconstruction error {worst_rec:.2e} (<= 1e-9), "
           f"max relative energy gap {worst_energy:.2e} (<= 1e-6)")
    assert ok


def test_label_transform(report):
    rng = np.random.default_rng(5)
    flips = 0
    for _ in range(1000):
        win = rng.uniform(0, 255, size=(7, 7))
        c = rng.uniform(0, 10)
        while c == 0:
            c = rng.uniform(0, 10)
        b = rng.uniform(0, 100)
        base = binarize(normalize_window(win, (3, 3), m=3))
        flips += not np.array_equal(base, binarize(normalize_window(c * win + b, (3, 3), m=3)))
    single = np.zeros((5, 5), dtype=bool)
    single[2, 2] = True
    cross = np.zeros((5, 5), dtype=bool)
    for y, x in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)]:
        cross[y, x] = True
    pair = np.zeros((5, 5), dtype=bool)
    pair[1, 1] = pair[1, 3] = True
    bridged = np.zeros((5, 5), dtype=bool)
    for x, y in [(1, 1), (0, 1), (2, 1), (1, 0), (1, 2), (3, 1), (4, 1), (3, 0), (3, 2)]:
        bridged[y, x] = True
    examples_ok = np.array_equal(dilate_circular(single), cross) and np.array_equal(dilate_circular(pair), bridged)
    ok = flips == 0 and examples_ok
    report("label transform", ok, f"1000 windows, {flips} affine mismatches (== 0), "
           f"cross-dilation examples {'match' if examples_ok else 'differ'}")
    assert ok


def test_scorer_sanity(report):
    rng = np.random.default_rng(9)
    imperfect = 0
    violations = 0
    for seed in range(100):
        truth, _ = generate_scene(SceneSpec(seed=seed))
        det = corrupt_scene(truth, CorruptionSpec(), seed=seed)
        for x in (truth, det):
            if sum(s.num_points() for s in x) == 0:
                continue
            r = score_dataset(x, x)
            imperfect += (r.f1, r.mse) != (1.0, 0.0)
    for k in range(1000):
        truth, _ = generate_scene(SceneSpec(seed=k % 100))
        det = corrupt_scene(truth, CorruptionSpec(), seed=k)[0]
        base = score_dataset([det], truth)
        f = int(rng.integers(0, det.frame_count))
        while True:
            p = Point2D(*rng.uniform(0, [639, 479]))
            if all(p.distance(q) > 10 for q in truth[0].points(f)):
                break
        pts = det.point_map()
        pts[f].append(p)
        more = score_dataset([det.replace_points(pts)], truth)
        violations += more.f1 > base.f1 or more.mse < base.mse
    ok = imperfect == 0 and violations == 0
    report("scorer sanity", ok, f"{imperfect} self-scores differ from (F1 1, MSE 0) (== 0); "
           f"{violations}/1000 insertions broke monotone penalty (== 0)")
    assert ok


def _pipeline(workdir: Path) -> dict[str, bytes]:
    run = [sys.executable, "-m", "geotraj", "--seed", "11"]
    truth, det, done, rep = (workdir / n for n in ("truth.json", "det.json", "done.json", "report.json"))
    for args in (
        ["simulate", "--truth", str(truth), "--detections", str(det), "--sequences", "8"],
        ["complete", "--input", str(det), "--output", str(done), "--jobs", "2"],
        ["score", "--pred", str(done), "--truth", str(truth), "--output", str(rep)],
    ):
        subprocess.run(run + args, check=True, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(workdir.glob("*.json")) if "manifest" not in p.name}


def test_cli_determinism(report, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    first, second = _pipeline(a), _pipeline(b)
    same = [k for k in first if first[k] == second.get(k)]
    ok = len(first) == 4 and first.keys() == second.keys() and len(same) == len(first)
    report("CLI determinism", ok, f"simulate | complete | score twice: {len(same)}/{len(first)} JSON outputs "
           "byte-identical (manifests excluded)")
    assert ok


def test_idempotence(report):
    radius = CompletionConfig().dedup_radius
    failures = 0
    for seed in range(100):
        truth, _ = generate_scene(SceneSpec(seed=seed))
        det = corrupt_scene(truth, CorruptionSpec(), seed=seed)[0]
        once = run_completion(det)
        twice = run_completion(once)
        for f in range(once.frame_count):
            a, b = once.points(f), twice.points(f)
            if len(a) != len(b) or any(min((p.distance(q) for q in b), default=math.inf) > radius for p in a):
                failures += 1
                break
    ok = failures == 0
    report("idempotence", ok, f"{failures}/100 scenes changed on a second run (== 0, within dedup radius {radius})")
    assert ok
