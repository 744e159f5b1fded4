"""Multi-frame trajectory completion for faint moving-object detections."""

__version__ = "0.1.0"

from .assignment import Assignment, build_cost_matrix, gated_matches, solve_assignment
from .completion import CompletionConfig, ThresholdSet, run_completion
from .model import FrameDetections, Point2D, Provenance, SequenceDetections, Track
from .scoring import EvalConfig, ScoreReport, score_dataset

__all__ = [
    "Assignment",
    "CompletionConfig",
    "EvalConfig",
    "FrameDetections",
    "Point2D",
    "Provenance",
    "ScoreReport",
    "SequenceDetections",
    "ThresholdSet",
    "Track",
    "build_cost_matrix",
    "gated_matches",
    "run_completion",
    "score_dataset",
    "solve_assignment",
]
