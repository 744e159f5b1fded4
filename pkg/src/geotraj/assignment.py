"""Rectangular minimum-cost linear assignment.

A shortest-augmenting-path Hungarian solver (row potentials ``u``, column
potentials ``v``), O(k^2 * n) for a k x n problem with k <= n. Wide and tall
matrices are handled by transposing so that the shorter side is assigned in
full. Among equal-cost optima the pair list that is lexicographically smallest
(sorted by row) is returned, so results are reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .model import FrameDetections, Point2D

# Relative slack when comparing candidate totals against the optimum during
# tie-breaking. Must stay far below the 1e-9 optimality contract.
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Assignment:
    pairs: list[tuple[int, int]]
    total_cost: float

    def __len__(self) -> int:
        return len(self.pairs)

    def row_to_col(self) -> dict[int, int]:
        return dict(self.pairs)


def _coords(points: FrameDetections | Iterable[Point2D | Sequence[float]]) -> np.ndarray:
    if isinstance(points, FrameDetections):
        points = points.points
    rows = [p.xy if isinstance(p, Point2D) else (float(p[0]), float(p[1])) for p in points]
    return np.asarray(rows, dtype=float).reshape(-1, 2)


def build_cost_matrix(a, b) -> np.ndarray:
    """Pairwise Euclidean distances, ``C[i, j] = |b_j - a_i|``.

    ``a`` and ``b`` may be ``FrameDetections`` or sequences of points / (x, y)
    pairs. Both must be non-empty.
    """
    pa, pb = _coords(a), _coords(b)
    if len(pa) == 0 or len(pb) == 0:
        raise InputError("build_cost_matrix needs two non-empty point sets")
    diff = pb[None, :, :] - pa[:, None, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def _validate(cost) -> np.ndarray:
    arr = np.asarray(cost, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"cost matrix must be 2-D and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("cost matrix contains non-finite entries")
    return arr


def _hungarian(cost: list[list[float]]) -> list[int]:
    """Column chosen for each row; requires ``len(cost) <= len(cost[0])``."""
    n = len(cost)
    m = len(cost[0])
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    owner = [0] * (m + 1)  # owner[j]: 1-based row matched to column j, 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            row = cost[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    result = [-1] * n
    for j in range(1, m + 1):
        if owner[j]:
            result[owner[j] - 1] = j - 1
    return result


def _optimal_pairs(cost: list[list[float]], rows: list[int], cols: list[int]) -> list[tuple[int, int]]:
    """Optimal pairs of the sub-problem restricted to ``rows`` x ``cols``."""
    if not rows or not cols:
        return []
    if len(rows) <= len(cols):
        sub = [[cost[r][c] for c in cols] for r in rows]
        picks = _hungarian(sub)
        return [(rows[i], cols[j]) for i, j in enumerate(picks)]
    sub = [[cost[r][c] for r in rows] for c in cols]
    picks = _hungarian(sub)
    return sorted((rows[i], cols[j]) for j, i in enumerate(picks))


def _pair_cost(cost: list[list[float]], pairs: Iterable[tuple[int, int]]) -> float:
    return sum(cost[r][c] for r, c in sorted(pairs))


def _lexicographic(cost: list[list[float]], optimum: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Smallest row-sorted pair list whose total matches the optimum.

    Rows are fixed greedily in order; for each row the smallest admissible
    column is kept if completing the remaining sub-problem optimally still
    reaches the global optimum. Leaving a row unassigned (tall matrices only)
    ranks after every column.
    """
    m, n = len(cost), len(cost[0])
    k = min(m, n)
    total = _pair_cost(cost, optimum)
    tol = _TIE_RTOL * max(1.0, abs(total))
    current = dict(optimum)
    chosen: list[tuple[int, int]] = []
    fixed = 0.0
    free_cols = list(range(n))
    for i in range(m):
        needed = k - len(chosen)
        if needed == 0:
            break
        target = current.get(i)
        rest_rows = list(range(i + 1, m))
        for j in free_cols:
            if target is not None and j >= target:
                break
            rest_cols = [c for c in free_cols if c != j]
            if min(len(rest_rows), len(rest_cols)) < needed - 1:
                continue
            sub = _optimal_pairs(cost, rest_rows, rest_cols)
            if fixed + cost[i][j] + _pair_cost(cost, sub) <= total + tol:
                current = dict(chosen)
                current[i] = j
                current.update(sub)
                target = j
                break
        if target is None:
            continue
        chosen.append((i, target))
        fixed += cost[i][target]
        free_cols.remove(target)
    return chosen


def solve_assignment(cost) -> Assignment:
    """Minimum-cost matching of cardinality ``min(m, n)``.

    Ties are broken towards the lexicographically smallest row-sorted pair
    list. Raises ``InputError`` for empty or non-finite matrices.
    """
    arr = _validate(cost)
    rows = arr.tolist()
    m, n = arr.shape
    pairs = _lexicographic(rows, _optimal_pairs(rows, list(range(m)), list(range(n))))
    return Assignment(pairs, _pair_cost(rows, pairs))


def gated_matches(asn: Assignment, cost, gate: float) -> list[tuple[int, int]]:
    """Pairs of ``asn`` whose cost is strictly below ``gate``, order preserved."""
    if not gate > 0:
        raise InputError(f"gate must be positive, got {gate}")
    arr = np.asarray(cost, dtype=float)
    return [(r, c) for r, c in asn.pairs if arr[r, c] < gate]


def match_points(a, b, gate: float | None = None) -> list[tuple[int, int]]:
    """Hungarian-match two point sets, optionally gated; empty sets give ``[]``."""
    if len(a) == 0 or len(b) == 0:
        return []
    cost = build_cost_matrix(a, b)
    asn = solve_assignment(cost)
    if gate is None:
        return list(asn.pairs)
    return gated_matches(asn, cost, gate)


def match_distances(a, b) -> list[float]:
    """Costs of the ungated optimal matching between two point sets."""
    if len(a) == 0 or len(b) == 0:
        return []
    cost = build_cost_matrix(a, b)
    return [float(cost[r, c]) for r, c in solve_assignment(cost).pairs]
