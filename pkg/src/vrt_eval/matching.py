"""One-to-one pairing of predicted and ground-truth masks.

Two matchers over the same n x k weight matrix (rows are predictions,
columns are ground truth, entries in [0, 1]):

* ``hungarian_match`` maximizes total weight; used on the metric side.
* ``greedy_match`` repeatedly takes the highest-weight feasible cell;
  used on the reward side.

Neither matcher ever emits a zero-weight pair. ``apply_threshold`` turns
an assignment into matched / unmatched sets at a score threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class Assignment:
    """Injective pairing of prediction rows to ground-truth columns.

    ``pairs`` holds (pred index, gt index, weight) triples; each index
    appears at most once on its side. ``n_pred`` / ``n_gt`` record the
    matrix shape so unmatched indices can be recovered later.
    """

    pairs: tuple[tuple[int, int, float], ...]
    n_pred: int
    n_gt: int

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.pairs))


@dataclass(frozen=True)
class MatchResult:
    """Assignment pairs split at a threshold into matched and unmatched sets."""

    matched: tuple[tuple[int, int, float], ...]
    unmatched_pred: tuple[int, ...]
    unmatched_gt: tuple[int, ...]
    tau: float

    @property
    def matched_ious(self) -> tuple[float, ...]:
        return tuple(w for _, _, w in self.matched)


def _as_weight_matrix(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim == 1 and w.size == 0:
        # A bare [] carries no column count; treat as 0 x 0.
        w = w.reshape(0, 0)
    if w.ndim != 2:
        raise ValueError(f"weight matrix must be 2-D, got shape {w.shape}")
    if w.size == 0:
        return w
    if not np.all(np.isfinite(w)):
        raise ValueError("weight matrix contains non-finite entries")
    if w.min() < 0.0 or w.max() > 1.0:
        raise ValueError("weights must lie in [0, 1]")
    return w


def hungarian_match(weights) -> Assignment:
    """Maximum-total-weight injective pairing; zero-weight pairs dropped.

    An empty matrix (no rows or no columns) yields an empty assignment.
    """
    w = _as_weight_matrix(weights)
    n, k = w.shape
    if n == 0 or k == 0:
        return Assignment((), n, k)
    rows, cols = linear_sum_assignment(w, maximize=True)
    pairs = tuple(
        (int(i), int(j), float(w[i, j])) for i, j in zip(rows, cols) if w[i, j] > 0.0
    )
    return Assignment(pairs, n, k)


def greedy_match(weights) -> Assignment:
    """Iteratively take the highest-weight feasible cell until none is positive.

    Ties break deterministically: weight descending, then pred index
    ascending, then gt index ascending. Pairs are returned in selection
    order.
    """
    w = _as_weight_matrix(weights)
    n, k = w.shape
    if n == 0 or k == 0:
        return Assignment((), n, k)
    cells = [
        (i, j) for i in range(n) for j in range(k) if w[i, j] > 0.0
    ]
    cells.sort(key=lambda c: (-w[c], c[0], c[1]))
    used_pred: set[int] = set()
    used_gt: set[int] = set()
    pairs = []
    for i, j in cells:
        if i in used_pred or j in used_gt:
            continue
        used_pred.add(i)
        used_gt.add(j)
        pairs.append((i, j, float(w[i, j])))
    return Assignment(tuple(pairs), n, k)


def apply_threshold(assignment: Assignment, tau: float) -> MatchResult:
    """Keep pairs with weight strictly above tau; everything else is unmatched."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    matched = tuple(p for p in assignment.pairs if p[2] > tau)
    pred_used = {p[0] for p in matched}
    gt_used = {p[1] for p in matched}
    unmatched_pred = tuple(i for i in range(assignment.n_pred) if i not in pred_used)
    unmatched_gt = tuple(j for j in range(assignment.n_gt) if j not in gt_used)
    return MatchResult(matched, unmatched_pred, unmatched_gt, tau)
