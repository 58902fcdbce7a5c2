"""Matching cost construction and the rectangular linear-assignment solver.

The matching cost between a prediction and a ground-truth target is the
weighted sum of a focal classification cost, an L1 box cost, and a negated
GIoU overlap cost.  Costs are assembled into a rectangular matrix and solved
optimally; the surplus side of a rectangular problem is simply left
unmatched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BoundingBox, giou, l1_distance

__all__ = [
    "ClassScores",
    "CostWeights",
    "CostMatrix",
    "Assignment",
    "focal_cost",
    "pair_cost",
    "build_cost_matrix",
    "hungarian",
]

# Per-class post-activation scores in [0, 1]; not required to sum to 1.
ClassScores = Sequence[float]


@dataclass(frozen=True)
class CostWeights:
    """Coefficients of the matching cost and focal-cost parameters.

    Defaults follow the DETR/MOTR-family convention (2, 5, 2).  The
    unweighted preset is available as :meth:`unit`.
    """

    w_class: float = 2.0
    w_l1: float = 5.0
    w_giou: float = 2.0
    alpha: float = 0.25
    gamma: float = 2.0
    eps: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("w_class", "w_l1", "w_giou"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and non-negative, got {self.gamma!r}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps!r}")

    @classmethod
    def unit(cls) -> "CostWeights":
        """Unweighted preset: all three components enter with weight 1."""
        return cls(w_class=1.0, w_l1=1.0, w_giou=1.0)


@dataclass(frozen=True)
class CostMatrix:
    """Rectangular cost matrix with its row/column labels.

    Rows are candidate queries (or query sets), columns are ground-truth
    targets; labels identify them for downstream assignment bookkeeping.
    """

    costs: np.ndarray
    row_labels: tuple = ()
    col_labels: tuple = ()

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs, dtype=float)
        if costs.ndim != 2:
            raise ValueError(f"cost matrix must be 2-dimensional, got shape {costs.shape}")
        object.__setattr__(self, "costs", costs)
        if self.row_labels and len(self.row_labels) != costs.shape[0]:
            raise ValueError("row labels do not match matrix height")
        if self.col_labels and len(self.col_labels) != costs.shape[1]:
            raise ValueError("col labels do not match matrix width")
        if costs.size and not np.all(np.isfinite(costs)):
            raise ValueError("cost matrix entries must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape


@dataclass(frozen=True)
class Assignment:
    """Result of a rectangular assignment: matched pairs plus the leftovers."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...] = ()
    unmatched_cols: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        rows = [r for r, _ in self.pairs]
        cols = [c for _, c in self.pairs]
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise ValueError("pairs must form a matching: no repeated row or col")

    def total_cost(self, cost: CostMatrix | np.ndarray) -> float:
        costs = cost.costs if isinstance(cost, CostMatrix) else np.asarray(cost)
        return float(sum(costs[r, c] for r, c in self.pairs))


def focal_cost(scores: ClassScores, target_class: int, w: CostWeights) -> float:
    """Focal classification cost of predicting ``target_class``.

    With ``p`` the predicted score of the target class this is
    ``alpha * (1-p)**gamma * (-log(p+eps)) - (1-alpha) * p**gamma * (-log(1-p+eps))``,
    strictly decreasing in ``p`` on (0, 1).
    """
    if not 0 <= target_class < len(scores):
        raise IndexError(
            f"target class {target_class} out of range for {len(scores)} class scores"
        )
    p = scores[target_class]
    pos = w.alpha * (1.0 - p) ** w.gamma * (-math.log(p + w.eps))
    neg = (1.0 - w.alpha) * p**w.gamma * (-math.log(1.0 - p + w.eps))
    return pos - neg


def pair_cost(
    pred_box: BoundingBox,
    pred_scores: ClassScores,
    gt_box: BoundingBox,
    gt_class: int,
    w: CostWeights,
) -> float:
    """Weighted matching cost of one prediction against one target.

    GIoU enters negated: higher overlap means lower cost.
    """
    return (
        w.w_class * focal_cost(pred_scores, gt_class, w)
        + w.w_l1 * l1_distance(pred_box, gt_box)
        - w.w_giou * giou(pred_box, gt_box)
    )


def build_cost_matrix(
    preds: Sequence[tuple[BoundingBox, ClassScores]],
    gts: Sequence[tuple[BoundingBox, int]],
    w: CostWeights,
) -> CostMatrix:
    """Pairwise cost matrix of all predictions against all targets.

    Either side may be empty, yielding a 0xM or Nx0 matrix.
    """
    costs = np.empty((len(preds), len(gts)), dtype=float)
    for i, (pbox, pscores) in enumerate(preds):
        for j, (gbox, gclass) in enumerate(gts):
            costs[i, j] = pair_cost(pbox, pscores, gbox, gclass, w)
    return CostMatrix(costs)


def hungarian(cost: CostMatrix | np.ndarray) -> Assignment:
    """Minimum-total-cost assignment of size ``min(rows, cols)``.

    Rectangular matrices are handled by leaving the surplus side unmatched.
    Tie-breaking among equally optimal assignments is whatever the
    deterministic solver produces.
    """
    costs = cost.costs if isinstance(cost, CostMatrix) else np.asarray(cost, dtype=float)
    if costs.ndim != 2:
        raise ValueError(f"cost matrix must be 2-dimensional, got shape {costs.shape}")
    if costs.size and np.isnan(costs).any():
        raise ValueError("cost matrix contains NaN entries")
    if costs.shape[0] == 0 or costs.shape[1] == 0:
        return Assignment(
            pairs=(),
            unmatched_rows=tuple(range(costs.shape[0])),
            unmatched_cols=tuple(range(costs.shape[1])),
        )
    rows, cols = linear_sum_assignment(costs)
    pairs = tuple(sorted(zip(rows.tolist(), cols.tolist())))
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=tuple(r for r in range(costs.shape[0]) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(costs.shape[1]) if c not in matched_cols),
    )
