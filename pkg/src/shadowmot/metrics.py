"""Tracking metrics: CLEAR accuracy, trajectory identity F1, and the
higher-order score with its detection/association decomposition.

All three run on identity-keyed tracklets.  Overlap is IoU, which is
invariant under axis-wise rescaling, so normalized and pixel inputs give
identical numbers as long as both sides live in the same space.

When the ground truth contains no boxes the CLEAR ratio divides by zero;
that case is reported as None rather than NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .geometry import BoundingBox, iou
from .matching import hungarian
from .tracker import Tracklets

__all__ = [
    "ClearMotResult",
    "AlphaScores",
    "HotaResult",
    "MetricsReport",
    "clear_mot",
    "idf1",
    "hota",
    "evaluate",
]

# IoU thresholds for the higher-order score: 0.05, 0.10, ..., 0.95.
ALPHA_GRID: tuple[float, ...] = tuple(k / 20 for k in range(1, 20))

_FORBIDDEN = 1e9


class ClearMotResult(NamedTuple):
    mota: Optional[float]
    ids: int
    fp: int
    fn: int


class AlphaScores(NamedTuple):
    alpha: float
    hota: float
    deta: float
    assa: float


class HotaResult(NamedTuple):
    hota: float
    deta: float
    assa: float
    per_alpha: tuple[AlphaScores, ...]


def _frame_union(gt: Tracklets, pred: Tracklets) -> list[int]:
    return sorted(set(gt.frames()) | set(pred.frames()))


def _iou_matrix(
    gt_boxes: list[BoundingBox], pred_boxes: list[BoundingBox]
) -> np.ndarray:
    m = np.zeros((len(gt_boxes), len(pred_boxes)))
    for a, g in enumerate(gt_boxes):
        for b, p in enumerate(pred_boxes):
            m[a, b] = iou(g, p)
    return m


def clear_mot(gt: Tracklets, pred: Tracklets, iou_threshold: float = 0.5) -> ClearMotResult:
    """CLEAR bookkeeping with match persistence.

    A correspondence from the previous frame is kept while its IoU stays at
    or above the gate; only the remainder is re-matched each frame.  A
    switch is counted when a ground-truth identity's matched prediction
    differs from the last one it ever had.  The accuracy score is
    1 - (FN + FP + IDS) / total ground-truth boxes, None when that total is
    zero.
    """
    gt_by_frame = gt.by_frame()
    pred_by_frame = pred.by_frame()
    total_gt = gt.n_boxes()

    fp = fn = ids = 0
    active: dict[int, int] = {}  # gt id -> pred id carried from previous frame
    last_match: dict[int, int] = {}  # gt id -> last pred id ever matched

    for frame in _frame_union(gt, pred):
        gts = gt_by_frame.get(frame, {})
        preds = pred_by_frame.get(frame, {})
        gt_ids = sorted(gts)
        pred_ids = sorted(preds)

        matches: dict[int, int] = {}
        for g, p in active.items():
            if g in gts and p in preds and iou(gts[g][0], preds[p][0]) >= iou_threshold:
                matches[g] = p

        free_gt = [g for g in gt_ids if g not in matches]
        taken_preds = set(matches.values())
        free_pred = [p for p in pred_ids if p not in taken_preds]
        if free_gt and free_pred:
            ious = _iou_matrix(
                [gts[g][0] for g in free_gt], [preds[p][0] for p in free_pred]
            )
            cost = np.where(ious >= iou_threshold, 1.0 - ious, _FORBIDDEN)
            for r, c in hungarian(cost).pairs:
                if ious[r, c] >= iou_threshold:
                    matches[free_gt[r]] = free_pred[c]

        for g, p in matches.items():
            if g in last_match and last_match[g] != p:
                ids += 1
            last_match[g] = p
        fn += len(gt_ids) - len(matches)
        fp += len(pred_ids) - len(matches)
        active = matches

    mota = None if total_gt == 0 else 1.0 - (fn + fp + ids) / total_gt
    return ClearMotResult(mota=mota, ids=ids, fp=fp, fn=fn)


def idf1(gt: Tracklets, pred: Tracklets, iou_threshold: float = 0.5) -> float:
    """Trajectory-level identity F1.

    One global bipartite matching between ground-truth and predicted
    trajectories maximizes the number of frames where a mapped pair
    overlaps at or above the gate (the identity true positives);
    2*IDTP / (total gt boxes + total pred boxes) follows from the standard
    definition.  Both sides empty scores 1 by convention.
    """
    total_gt = gt.n_boxes()
    total_pred = pred.n_boxes()
    if total_gt == 0 and total_pred == 0:
        return 1.0
    if total_gt == 0 or total_pred == 0:
        return 0.0

    gt_ids = gt.identities
    pred_ids = pred.identities
    overlap = np.zeros((len(gt_ids), len(pred_ids)))
    pred_by_frame = pred.by_frame()
    for a, g in enumerate(gt_ids):
        for obs in gt.track(g):
            frame_preds = pred_by_frame.get(obs.frame)
            if not frame_preds:
                continue
            for b, p in enumerate(pred_ids):
                entry = frame_preds.get(p)
                if entry is not None and iou(obs.box, entry[0]) >= iou_threshold:
                    overlap[a, b] += 1

    idtp = -hungarian(-overlap).total_cost(-overlap)
    return 2.0 * float(idtp) / (total_gt + total_pred)


def hota(gt: Tracklets, pred: Tracklets) -> HotaResult:
    """Higher-order score via the standard two-pass procedure.

    Pass one accumulates Jaccard-weighted potential matches and per-identity
    presence counts to form a global alignment score.  Pass two re-matches
    every frame on alignment-weighted similarity, thresholds the matched
    similarities on the alpha grid, and aggregates detection and
    association accuracies per alpha; the headline number is the mean over
    alphas of the geometric mean of the two.
    """
    gt_ids = gt.identities
    pred_ids = pred.identities
    n_gt, n_pred = len(gt_ids), len(pred_ids)
    if n_gt == 0 and n_pred == 0:
        per = tuple(AlphaScores(a, 1.0, 1.0, 1.0) for a in ALPHA_GRID)
        return HotaResult(1.0, 1.0, 1.0, per)

    gt_row = {g: a for a, g in enumerate(gt_ids)}
    pred_col = {p: b for b, p in enumerate(pred_ids)}
    gt_by_frame = gt.by_frame()
    pred_by_frame = pred.by_frame()
    frames = _frame_union(gt, pred)

    # pass one: global alignment from potential matches and presence counts
    potential = np.zeros((n_gt, n_pred))
    gt_count = np.zeros(n_gt)
    pred_count = np.zeros(n_pred)
    per_frame: list[tuple[list[int], list[int], np.ndarray]] = []
    for frame in frames:
        g_here = sorted(gt_by_frame.get(frame, {}))
        p_here = sorted(pred_by_frame.get(frame, {}))
        rows = [gt_row[g] for g in g_here]
        cols = [pred_col[p] for p in p_here]
        sim = _iou_matrix(
            [gt_by_frame[frame][g][0] for g in g_here],
            [pred_by_frame[frame][p][0] for p in p_here],
        )
        if rows and cols:
            denom = sim.sum(axis=0)[np.newaxis, :] + sim.sum(axis=1)[:, np.newaxis] - sim
            weighted = np.zeros_like(sim)
            mask = denom > 1e-12
            weighted[mask] = sim[mask] / denom[mask]
            potential[np.ix_(rows, cols)] += weighted
        gt_count[rows] += 1
        pred_count[cols] += 1
        per_frame.append((rows, cols, sim))

    alignment = potential / (
        gt_count[:, np.newaxis] + pred_count[np.newaxis, :] - potential
    )

    # pass two: per-frame matching on alignment-weighted similarity
    n_alpha = len(ALPHA_GRID)
    tp = np.zeros(n_alpha)
    fn = np.zeros(n_alpha)
    fp = np.zeros(n_alpha)
    matches = [np.zeros((n_gt, n_pred)) for _ in range(n_alpha)]
    for rows, cols, sim in per_frame:
        if rows and cols:
            score = alignment[np.ix_(rows, cols)] * sim
            pairs = hungarian(-score).pairs
            for a, alpha in enumerate(ALPHA_GRID):
                n_matched = 0
                for r, c in pairs:
                    if sim[r, c] >= alpha - 1e-12:
                        matches[a][rows[r], cols[c]] += 1
                        n_matched += 1
                tp[a] += n_matched
                fn[a] += len(rows) - n_matched
                fp[a] += len(cols) - n_matched
        else:
            fn += len(rows)
            fp += len(cols)

    presence = gt_count[:, np.newaxis] + pred_count[np.newaxis, :]
    per_alpha = []
    for a, alpha in enumerate(ALPHA_GRID):
        deta_a = tp[a] / max(1.0, tp[a] + fn[a] + fp[a])
        ass_scores = matches[a] / np.maximum(1.0, presence - matches[a])
        assa_a = float((matches[a] * ass_scores).sum() / max(1.0, tp[a]))
        per_alpha.append(AlphaScores(alpha, math.sqrt(deta_a * assa_a), float(deta_a), assa_a))

    return HotaResult(
        hota=float(sum(s.hota for s in per_alpha) / n_alpha),
        deta=float(sum(s.deta for s in per_alpha) / n_alpha),
        assa=float(sum(s.assa for s in per_alpha) / n_alpha),
        per_alpha=tuple(per_alpha),
    )


@dataclass(frozen=True)
class MetricsReport:
    """Combined evaluation result; mota is None when the ground truth has
    no boxes to normalize by."""

    hota: float
    deta: float
    assa: float
    mota: Optional[float]
    idf1: float
    ids: int
    fp: int
    fn: int
    per_alpha: tuple[AlphaScores, ...] = ()

    def to_json_dict(self) -> dict:
        doc = {
            "hota": self.hota,
            "deta": self.deta,
            "assa": self.assa,
            "mota": self.mota,
            "idf1": self.idf1,
            "ids": self.ids,
            "fp": self.fp,
            "fn": self.fn,
        }
        if self.per_alpha:
            doc["per_alpha"] = [
                {"alpha": s.alpha, "hota": s.hota, "deta": s.deta, "assa": s.assa}
                for s in self.per_alpha
            ]
        return doc

    def text_table(self) -> str:
        def fmt(v: Optional[float]) -> str:
            return "undefined" if v is None else f"{v:.4f}"

        rows = [
            ("hota", fmt(self.hota)),
            ("deta", fmt(self.deta)),
            ("assa", fmt(self.assa)),
            ("mota", fmt(self.mota)),
            ("idf1", fmt(self.idf1)),
            ("ids", str(self.ids)),
            ("fp", str(self.fp)),
            ("fn", str(self.fn)),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def evaluate(gt: Tracklets, pred: Tracklets, iou_threshold: float = 0.5) -> MetricsReport:
    """All metrics in one report; the CLEAR gate applies to the CLEAR and
    identity-F1 scores, the higher-order score keeps its own alpha grid."""
    clear = clear_mot(gt, pred, iou_threshold)
    h = hota(gt, pred)
    return MetricsReport(
        hota=h.hota,
        deta=h.deta,
        assa=h.assa,
        mota=clear.mota,
        idf1=idf1(gt, pred, iou_threshold),
        ids=clear.ids,
        fp=clear.fp,
        fn=clear.fn,
        per_alpha=h.per_alpha,
    )
