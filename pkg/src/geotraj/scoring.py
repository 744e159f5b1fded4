"""Point-set detection metrics.

Predictions and truths are Hungarian-matched per frame on a gated cost, so the
number of pairs within ``match_epsilon`` is maximised first and their total
distance second. Each such pair is a true positive contributing its squared
distance. Every false positive and false negative contributes ``mse_clip ** 2``. The
reported ``mse`` is the sum of these terms over the whole dataset.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .assignment import build_cost_matrix, solve_assignment
from .errors import InputError
from .model import FrameDetections, SequenceDetections


@dataclass(frozen=True)
class EvalConfig:
    match_epsilon: float = 10.0
    mse_clip: float | None = None

    def __post_init__(self) -> None:
        if not self.match_epsilon > 0 or (self.mse_clip is not None and not self.mse_clip > 0):
            raise InputError("match_epsilon and mse_clip must be > 0")

    @property
    def clip(self) -> float:
        return self.match_epsilon if self.mse_clip is None else self.mse_clip


class FrameMatch(NamedTuple):
    tp: int
    fp: int
    fn: int
    squared_errors: list[float]
    matched: list[tuple[int, int]]  # (pred index, truth index)
    unmatched_pred: list[int]
    unmatched_truth: list[int]

    def squared_error(self, clip: float) -> float:
        return sum(self.squared_errors) + (self.fp + self.fn) * clip**2


@dataclass
class FrameScore:
    sequence_id: int
    frame: int
    tp: int
    fp: int
    fn: int
    squared_error: float


@dataclass
class ScoreReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    mse: float
    per_frame: list[FrameScore] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        return (
            f"TP={self.tp} FP={self.fp} FN={self.fn}  "
            f"precision={self.precision:.4f} recall={self.recall:.4f} "
            f"F1={self.f1:.4f} MSE={self.mse:.4f}"
        )


def match_frame(pred: FrameDetections, truth: FrameDetections, cfg: EvalConfig | None = None) -> FrameMatch:
    cfg = cfg or EvalConfig()
    matched: list[tuple[int, int]] = []
    errors: list[float] = []
    if len(pred) and len(truth):
        cost = build_cost_matrix(pred, truth)
        # Out-of-tolerance pairs get a flat cost larger than any sum of
        # in-tolerance ones, so the solver maximises TPs before minimising
        # distance. Raw distances would let a far pair steal a close one.
        big = (min(cost.shape) + 1) * cfg.match_epsilon
        gated = np.where(cost <= cfg.match_epsilon, cost, big)
        for i, j in solve_assignment(gated).pairs:
            if cost[i, j] <= cfg.match_epsilon:
                matched.append((i, j))
                errors.append(float(cost[i, j]) ** 2)
    used_pred = {i for i, _ in matched}
    used_truth = {j for _, j in matched}
    unmatched_pred = [i for i in range(len(pred)) if i not in used_pred]
    unmatched_truth = [j for j in range(len(truth)) if j not in used_truth]
    return FrameMatch(
        len(matched), len(unmatched_pred), len(unmatched_truth), errors, matched, unmatched_pred, unmatched_truth
    )


def f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall and F1; any 0/0 is taken as 0."""
    if min(tp, fp, fn) < 0:
        raise InputError("counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def score_sequence(pred: SequenceDetections, truth: SequenceDetections, cfg: EvalConfig) -> list[FrameScore]:
    out = []
    for f in range(max(pred.frame_count, truth.frame_count)):
        fm = match_frame(FrameDetections(f, pred.points(f)), FrameDetections(f, truth.points(f)), cfg)
        out.append(FrameScore(truth.sequence_id, f, fm.tp, fm.fp, fm.fn, fm.squared_error(cfg.clip)))
    return out


def score_dataset(
    pred: list[SequenceDetections], truth: list[SequenceDetections], cfg: EvalConfig | None = None
) -> ScoreReport:
    cfg = cfg or EvalConfig()
    pred_by_id = {s.sequence_id: s for s in pred}
    truth_by_id = {s.sequence_id: s for s in truth}
    only_pred = sorted(set(pred_by_id) - set(truth_by_id))
    only_truth = sorted(set(truth_by_id) - set(pred_by_id))
    if only_pred or only_truth:
        raise InputError(
            f"sequence ids present on one side only: predictions {only_pred}, truth {only_truth}"
        )
    per_frame: list[FrameScore] = []
    for sid in sorted(truth_by_id):
        per_frame.extend(score_sequence(pred_by_id[sid], truth_by_id[sid], cfg))
    tp = sum(s.tp for s in per_frame)
    fp = sum(s.fp for s in per_frame)
    fn = sum(s.fn for s in per_frame)
    precision, recall, f1 = f1_from_counts(tp, fp, fn)
    mse = sum(s.squared_error for s in per_frame)
    return ScoreReport(tp, fp, fn, precision, recall, f1, mse, per_frame)
