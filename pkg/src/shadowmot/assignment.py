"""Label assignment for tracking and detection query sets.

Two regimes are implemented.  The competition regime binds tracked
identities to their tracking sets and offers only newborn objects to
detection sets, at every decoder layer.  The coopetition regime additionally
offers the tracked objects to detection sets at intermediate layers, while
the final layer reverts to pure competition so that no duplicate
trajectories survive training.

Tracking sets inherit their target by identity, with no cost computation.
Detection sets are matched by Hungarian assignment on a set-level cost
matrix obtained by reducing a (set, shadow, target) cost tensor over the
shadow axis; every shadow of a matched set then shares the representative's
target.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .geometry import BoundingBox
from .matching import ClassScores, CostMatrix, CostWeights, hungarian, pair_cost
from .shadow import REDUCTIONS, ShadowSet

__all__ = [
    "Target",
    "GroundTruthObject",
    "FrameGroundTruth",
    "LabelAssignment",
    "SetCostTensor",
    "tala_targets",
    "cola_targets",
    "reduce_set_costs",
    "build_set_cost_tensor",
    "assign_detection_sets",
    "assign_tracking_sets",
    "merge_assignments",
]

# None is the explicit background target; assignments are total functions.
Target = Optional[int]


@dataclass(frozen=True)
class GroundTruthObject:
    """One annotated object in one frame."""

    identity: int
    box: BoundingBox
    class_index: int = 0

    def __post_init__(self) -> None:
        if self.class_index < 0:
            raise ValueError(f"class_index must be >= 0, got {self.class_index}")


@dataclass(frozen=True)
class FrameGroundTruth:
    """This frame's objects, partitioned by whether their identity was
    already being tracked (alive in the previous frame's track list) or is
    newborn."""

    tracked: tuple[GroundTruthObject, ...]
    newborn: tuple[GroundTruthObject, ...]

    def __post_init__(self) -> None:
        ids = [o.identity for o in self.tracked] + [o.identity for o in self.newborn]
        if len(ids) != len(set(ids)):
            raise ValueError("ground-truth identities must be unique within a frame")

    @classmethod
    def partition(cls, objects: Sequence[GroundTruthObject], track_ids: Sequence[int]) -> "FrameGroundTruth":
        """Split ``objects`` against the live track list."""
        alive = set(track_ids)
        return cls(
            tracked=tuple(o for o in objects if o.identity in alive),
            newborn=tuple(o for o in objects if o.identity not in alive),
        )

    @property
    def objects(self) -> tuple[GroundTruthObject, ...]:
        return self.tracked + self.newborn

    @property
    def identities(self) -> frozenset[int]:
        return frozenset(o.identity for o in self.objects)


def _check_competition(targets: Mapping[int, Target], kind: str) -> None:
    assigned = [t for t in targets.values() if t is not None]
    if len(assigned) != len(set(assigned)):
        raise ValueError(f"duplicate identity among {kind} set targets")


@dataclass(frozen=True)
class LabelAssignment:
    """Per-layer supervision targets, keyed by set id within each role.

    A target of None means background.  Within one layer each identity
    appears at most once among tracking sets and at most once among
    detection sets; the latter slot is only ever occupied at intermediate
    layers under coopetition.
    """

    layer: int
    n_shadows: int
    tracking: Mapping[int, Target] = field(default_factory=dict)
    detection: Mapping[int, Target] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.layer < 1:
            raise ValueError(f"layer index is 1-based, got {self.layer}")
        if self.n_shadows < 1:
            raise ValueError(f"n_shadows must be >= 1, got {self.n_shadows}")
        _check_competition(self.tracking, "tracking")
        _check_competition(self.detection, "detection")

    def shadow_targets(self, role: str, set_id: int) -> tuple[Target, ...]:
        """The per-shadow view: every shadow of a set shares its target."""
        table = {"tracking": self.tracking, "detection": self.detection}[role]
        return (table[set_id],) * self.n_shadows


@dataclass(frozen=True)
class SetCostTensor:
    """Matching costs indexed (detection set, shadow, candidate target)."""

    costs: np.ndarray
    set_ids: tuple[int, ...]
    target_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs, dtype=float)
        if costs.ndim != 3:
            raise ValueError(f"cost tensor must be 3-dimensional, got shape {costs.shape}")
        if costs.shape[0] != len(self.set_ids):
            raise ValueError("set_ids do not match tensor extent")
        if costs.shape[2] != len(self.target_ids):
            raise ValueError("target_ids do not match tensor extent")
        if costs.size and not np.all(np.isfinite(costs)):
            raise ValueError("cost tensor entries must be finite")
        object.__setattr__(self, "costs", costs)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.costs.shape


def _check_layer(layer: int, n_layers: int) -> None:
    if not 1 <= layer <= n_layers:
        raise ValueError(f"layer must lie in [1, {n_layers}], got {layer}")


def _track_targets(track_ids: Sequence[int], gt: FrameGroundTruth) -> dict[int, Target]:
    present = gt.identities
    return {tid: (tid if tid in present else None) for tid in track_ids}


def tala_targets(
    track_ids: Sequence[int],
    gt: FrameGroundTruth,
    layer: int,
    n_layers: int,
) -> tuple[dict[int, Target], tuple[GroundTruthObject, ...]]:
    """Competition assignment: each live track keeps its identity when the
    object is present, otherwise background; detection candidates are the
    newborns only, at every layer.

    The live track list is passed explicitly because a track whose object
    vanished this frame appears nowhere in ``gt`` yet still needs its
    background target.
    """
    _check_layer(layer, n_layers)
    if len(set(track_ids)) != len(track_ids):
        raise ValueError("track_ids must be unique")
    return _track_targets(track_ids, gt), gt.newborn


def cola_targets(
    track_ids: Sequence[int],
    gt: FrameGroundTruth,
    layer: int,
    n_layers: int,
) -> tuple[dict[int, Target], tuple[GroundTruthObject, ...]]:
    """Coopetition assignment: identical to the competition rule except that
    at layers below the last, tracked objects are offered to detection sets
    as well (candidates = newborns then tracked, all of this frame's
    objects).  The final layer is pure competition."""
    track_targets, newborn = tala_targets(track_ids, gt, layer, n_layers)
    if layer < n_layers:
        return track_targets, gt.newborn + gt.tracked
    return track_targets, newborn


def reduce_set_costs(tensor: SetCostTensor, reduction: str) -> CostMatrix:
    """Collapse the shadow axis with min/mean/max, yielding the set-level
    cost matrix fed to the Hungarian solver."""
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
    op = {"min": np.min, "mean": np.mean, "max": np.max}[reduction]
    reduced = op(tensor.costs, axis=1) if tensor.costs.size else tensor.costs.reshape(
        tensor.costs.shape[0], tensor.costs.shape[2]
    )
    return CostMatrix(reduced, row_labels=tensor.set_ids, col_labels=tensor.target_ids)


def build_set_cost_tensor(
    predictions: Sequence[Sequence[tuple[BoundingBox, ClassScores]]],
    set_ids: Sequence[int],
    candidates: Sequence[GroundTruthObject],
    weights: CostWeights,
) -> SetCostTensor:
    """Pairwise costs of every shadow of every set against every candidate."""
    if len(predictions) != len(set_ids):
        raise ValueError("predictions and set_ids disagree on the number of sets")
    n_shadows = {len(p) for p in predictions}
    if len(n_shadows) > 1:
        raise ValueError(f"sets disagree on shadow count: {sorted(n_shadows)}")
    ns = n_shadows.pop() if n_shadows else 1
    if ns < 1:
        raise ValueError("every set needs at least one shadow prediction")
    costs = np.empty((len(predictions), ns, len(candidates)), dtype=float)
    for i, per_shadow in enumerate(predictions):
        for j, (box, scores) in enumerate(per_shadow):
            for k, cand in enumerate(candidates):
                costs[i, j, k] = pair_cost(box, scores, cand.box, cand.class_index, weights)
    return SetCostTensor(costs, set_ids=tuple(set_ids), target_ids=tuple(c.identity for c in candidates))


def assign_detection_sets(
    predictions: Sequence[Sequence[tuple[BoundingBox, ClassScores]]],
    set_ids: Sequence[int],
    candidates: Sequence[GroundTruthObject],
    weights: CostWeights,
    reduction: str,
    layer: int,
) -> LabelAssignment:
    """Match detection sets to candidate targets.

    Builds the set cost tensor, reduces it over shadows, solves the
    rectangular assignment, and broadcasts each matched target to all
    shadows of its set.  Unmatched sets get background.
    """
    tensor = build_set_cost_tensor(predictions, set_ids, candidates, weights)
    n_shadows = tensor.shape[1] if tensor.shape[0] else 1
    targets: dict[int, Target] = {sid: None for sid in set_ids}
    if candidates and predictions:
        matrix = reduce_set_costs(tensor, reduction)
        result = hungarian(matrix)
        for row, col in result.pairs:
            targets[tensor.set_ids[row]] = tensor.target_ids[col]
    return LabelAssignment(layer=layer, n_shadows=n_shadows, detection=targets)


def assign_tracking_sets(
    track_sets: Sequence[ShadowSet],
    gt: FrameGroundTruth,
    layer: int,
) -> LabelAssignment:
    """Bind each tracking set to its stored identity when present in the
    frame's ground truth, else background.  Pure inheritance, no costs."""
    identities = [s.identity for s in track_sets]
    if any(i is None for i in identities):
        raise ValueError("assign_tracking_sets requires tracking-role sets")
    if len(set(identities)) != len(identities):
        raise ValueError("duplicate identities in the track bank")
    n_shadows = track_sets[0].n_shadows if track_sets else 1
    present = gt.identities
    targets: dict[int, Target] = {}
    for s in track_sets:
        assert s.identity is not None
        targets[s.set_id] = s.identity if s.identity in present else None
    return LabelAssignment(layer=layer, n_shadows=n_shadows, tracking=targets)


def merge_assignments(track: LabelAssignment, det: LabelAssignment) -> LabelAssignment:
    """Combine a tracking-only and a detection-only assignment for the same
    layer into one record."""
    if track.layer != det.layer:
        raise ValueError(f"layer mismatch: {track.layer} vs {det.layer}")
    if track.tracking and det.tracking or track.detection and det.detection:
        raise ValueError("assignments overlap in role")
    n_shadows = max(track.n_shadows, det.n_shadows)
    return LabelAssignment(
        layer=track.layer,
        n_shadows=n_shadows,
        tracking=dict(track.tracking) or dict(det.tracking),
        detection=dict(det.detection) or dict(track.detection),
    )
