"""Synthetic scenes and the oracle decoder that stands in for a trained
network.

Scenes are constant-velocity trajectories with border reflection, optional
per-frame jitter, occlusion windows, and a newborn schedule (everyone at
frame 1, or staggered arrivals).  The oracle converts scene plus live query
sets into per-layer, per-shadow box/score predictions with controllable
noise: box noise shrinks geometrically across layers, occlusion drops the
score, and each shadow's score can independently collapse to zero.  That
collapse is the failure mode the shadow mechanism exists to survive, so it
is the one knob the robustness experiments turn.

All randomness flows from the config seeds through named substreams, so
every output is reproducible draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .assignment import FrameGroundTruth, GroundTruthObject
from .geometry import BoundingBox, iou
from .matching import ClassScores
from .shadow import ShadowSet
from .tracker import ShadowTracker, Tracklets, TrackerConfig

__all__ = [
    "Schedule",
    "SceneConfig",
    "OracleConfig",
    "SceneFrame",
    "Scene",
    "generate_scene",
    "oracle_decode",
    "emit_training_targets",
    "track_scene",
]

Schedule = Literal["all-at-start", "uniform"]

_STREAM_SCENE = 0
_STREAM_ORACLE = 1
_STREAM_CORRUPT = 2

SCENE_JSON_VERSION = 1


@dataclass(frozen=True)
class SceneConfig:
    """Scene generation knobs.  Occlusions are (identity, first, last)
    frame windows, inclusive on both ends."""

    n_frames: int
    n_objects: int
    schedule: Schedule = "all-at-start"
    jitter: float = 0.0
    occlusions: tuple[tuple[int, int, int], ...] = ()
    image_width: int = 1920
    image_height: int = 1080
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1, got {self.n_frames}")
        if self.n_objects < 0:
            raise ValueError(f"n_objects must be >= 0, got {self.n_objects}")
        if self.schedule not in ("all-at-start", "uniform"):
            raise ValueError(f"schedule must be 'all-at-start' or 'uniform', got {self.schedule!r}")
        if not (math.isfinite(self.jitter) and self.jitter >= 0):
            raise ValueError(f"jitter must be finite and >= 0, got {self.jitter!r}")
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be positive")
        occs = tuple((int(i), int(a), int(b)) for i, a, b in self.occlusions)
        object.__setattr__(self, "occlusions", occs)
        for identity, start, end in occs:
            if identity < 1:
                raise ValueError(f"occlusion identity must be >= 1, got {identity}")
            if not 1 <= start <= end <= self.n_frames:
                raise ValueError(
                    f"occlusion window [{start}, {end}] outside frames [1, {self.n_frames}]"
                )

    def to_json(self) -> dict:
        return {
            "n_frames": self.n_frames,
            "n_objects": self.n_objects,
            "schedule": self.schedule,
            "jitter": self.jitter,
            "occlusions": [list(o) for o in self.occlusions],
            "image_width": self.image_width,
            "image_height": self.image_height,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SceneConfig":
        known = {
            "n_frames", "n_objects", "schedule", "jitter", "occlusions",
            "image_width", "image_height", "seed",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown scene config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        if "occlusions" in kwargs:
            kwargs["occlusions"] = tuple(tuple(o) for o in kwargs["occlusions"])
        return cls(**kwargs)


@dataclass(frozen=True)
class OracleConfig:
    """Noise model of the decoder stand-in.

    ``refinement`` scales layer-l box noise by refinement**(l-1), so later
    layers are sharper.  ``p_corrupt`` zeroes a shadow's score for one
    frame, independently per shadow and frame but shared across layers.
    """

    seed: int = 0
    box_noise_std: float = 0.0
    base_score: float = 0.9
    occ_drop: float = 0.6
    p_corrupt: float = 0.0
    refinement: float = 0.5
    fp_rate: float = 0.0
    fp_score: float = 0.1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.box_noise_std) and self.box_noise_std >= 0):
            raise ValueError(f"box_noise_std must be finite and >= 0, got {self.box_noise_std!r}")
        for name in ("base_score", "occ_drop", "p_corrupt", "fp_rate", "fp_score"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 <= self.refinement < 1.0:
            raise ValueError(f"refinement must lie in [0, 1), got {self.refinement!r}")


class SceneFrame(NamedTuple):
    t: int
    box: BoundingBox
    visible: bool


@dataclass
class Scene:
    """Ground truth: per-identity frame states plus the generating config."""

    config: SceneConfig
    tracks: dict[int, tuple[SceneFrame, ...]]

    def __post_init__(self) -> None:
        for identity, states in self.tracks.items():
            frames = [s.t for s in states]
            if frames != sorted(set(frames)):
                raise ValueError(f"identity {identity}: frame indices must strictly increase")
            if frames and (frames[0] < 1 or frames[-1] > self.config.n_frames):
                raise ValueError(f"identity {identity}: frames outside [1, {self.config.n_frames}]")

    @property
    def n_frames(self) -> int:
        return self.config.n_frames

    @property
    def identities(self) -> tuple[int, ...]:
        return tuple(sorted(self.tracks))

    def first_frame(self, identity: int) -> int:
        return self.tracks[identity][0].t

    def states_at(self, frame: int) -> dict[int, SceneFrame]:
        out = {}
        for identity, states in self.tracks.items():
            for s in states:
                if s.t == frame:
                    out[identity] = s
                    break
        return out

    def visible_objects(self, frame: int) -> tuple[GroundTruthObject, ...]:
        return tuple(
            GroundTruthObject(identity=i, box=s.box)
            for i, s in sorted(self.states_at(frame).items())
            if s.visible
        )

    def gt_tracklets(self, include_occluded: bool = False) -> Tracklets:
        """Ground truth as tracklets; occluded frames are skipped unless
        asked for, since an occluded object is not an evaluation target."""
        out = Tracklets()
        for identity in self.identities:
            for s in self.tracks[identity]:
                if s.visible or include_occluded:
                    out.add(identity, s.t, s.box, 1.0)
        return out

    def to_json(self) -> dict:
        return {
            "version": SCENE_JSON_VERSION,
            "config": self.config.to_json(),
            "tracks": [
                {
                    "id": identity,
                    "frames": [
                        {"t": s.t, "box": [s.box.cx, s.box.cy, s.box.w, s.box.h], "visible": s.visible}
                        for s in self.tracks[identity]
                    ],
                }
                for identity in self.identities
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Scene":
        version = doc.get("version")
        if version != SCENE_JSON_VERSION:
            raise ValueError(f"unsupported scene document version {version!r}")
        unknown = set(doc) - {"version", "config", "tracks"}
        if unknown:
            raise ValueError(f"unknown scene document keys: {sorted(unknown)}")
        config = SceneConfig.from_json(doc["config"])
        tracks: dict[int, tuple[SceneFrame, ...]] = {}
        for entry in doc["tracks"]:
            identity = int(entry["id"])
            states = tuple(
                SceneFrame(
                    t=int(f["t"]),
                    box=BoundingBox(*(float(v) for v in f["box"])),
                    visible=bool(f["visible"]),
                )
                for f in entry["frames"]
            )
            tracks[identity] = states
        return cls(config=config, tracks=tracks)


def _reflect(center: float, half: float) -> tuple[float, float]:
    """Fold a center coordinate back into [half, 1-half]; returns the new
    coordinate and the velocity sign flip (+1 or -1)."""
    lo, hi = half, 1.0 - half
    flip = 1.0
    if lo >= hi:
        return min(max(center, 0.0), 1.0), flip
    c = center
    for _ in range(8):
        if c < lo:
            c = 2 * lo - c
            flip = -flip
        elif c > hi:
            c = 2 * hi - c
            flip = -flip
        else:
            break
    return min(max(c, lo), hi), flip


def generate_scene(cfg: SceneConfig) -> Scene:
    """Deterministic scene synthesis.

    Each identity draws its own substream, so one object's trajectory does
    not depend on how many others exist.  Objects persist from their first
    frame to the final frame; occlusion windows only clear the visibility
    flag.
    """
    occluded: dict[int, set[int]] = {}
    for identity, start, end in cfg.occlusions:
        occluded.setdefault(identity, set()).update(range(start, end + 1))

    tracks: dict[int, tuple[SceneFrame, ...]] = {}
    for identity in range(1, cfg.n_objects + 1):
        rng = np.random.default_rng([cfg.seed, _STREAM_SCENE, identity])
        if cfg.schedule == "all-at-start":
            first = 1
        else:
            first = int(rng.integers(1, cfg.n_frames + 1))
        cx = float(rng.uniform(0.15, 0.85))
        cy = float(rng.uniform(0.15, 0.85))
        w = float(rng.uniform(0.05, 0.2))
        h = float(rng.uniform(0.05, 0.2))
        vx = float(rng.uniform(-0.01, 0.01))
        vy = float(rng.uniform(-0.01, 0.01))
        states = []
        for t in range(first, cfg.n_frames + 1):
            if t > first:
                jx, jy = (rng.normal(0.0, cfg.jitter, size=2) if cfg.jitter > 0 else (0.0, 0.0))
                cx, fx = _reflect(cx + vx + float(jx), w / 2)
                cy, fy = _reflect(cy + vy + float(jy), h / 2)
                vx *= fx
                vy *= fy
            visible = t not in occluded.get(identity, ())
            states.append(SceneFrame(t=t, box=BoundingBox(cx, cy, w, h), visible=visible))
        tracks[identity] = tuple(states)
    return Scene(config=cfg, tracks=tracks)


def emit_training_targets(
    scene: Scene, frame: int, track_ids: Sequence[int]
) -> FrameGroundTruth:
    """This frame's visible objects split into tracked vs newborn against
    the live track list."""
    if not 1 <= frame <= scene.n_frames:
        raise ValueError(f"frame {frame} outside [1, {scene.n_frames}]")
    return FrameGroundTruth.partition(scene.visible_objects(frame), track_ids)


def _anchor_box(s: ShadowSet) -> BoundingBox:
    cx, cy, w, h = s.shadows[0].position
    return BoundingBox(cx, cy, max(w, 0.0), max(h, 0.0))


def _noisy_box(target: BoundingBox, eps: np.ndarray, scale: float) -> BoundingBox:
    return BoundingBox(
        target.cx + float(eps[0]) * scale,
        target.cy + float(eps[1]) * scale,
        max(target.w + float(eps[2]) * scale, 0.0),
        max(target.h + float(eps[3]) * scale, 0.0),
    )


def oracle_decode(
    scene: Scene,
    frame: int,
    live_sets: Sequence[ShadowSet],
    cfg: OracleConfig,
    n_layers: int,
) -> list[list[list[tuple[BoundingBox, ClassScores]]]]:
    """Per-layer predictions for every live set, standing in for the
    decoder stack.

    Tracking sets are served the object their anchor sits on: each set
    claims the present object its anchor overlaps best (best first, any
    positive overlap, one set per object).  The claimed object's box is
    served with the base score, reduced under occlusion; a set whose
    anchor overlaps nothing has lost its target and scores zero.
    Detection sets are associated to visible objects no tracking set
    claimed: overlapping anchors claim first (IoU >= 0.5, best first),
    then leftover objects fill leftover sets in index order so no
    unclaimed object goes unserved while sets remain.  Unassociated sets
    emit a random low-score box, or a false positive at the configured
    rate.

    Output is indexed [layer][set][shadow]; layer noise shrinks by
    refinement**(layer-1) around a single per-frame draw, and per-shadow
    score corruption is shared across layers.
    """
    if not 1 <= frame <= scene.n_frames:
        raise ValueError(f"frame {frame} outside [1, {scene.n_frames}]")
    if n_layers < 1:
        raise ValueError(f"n_layers must be >= 1, got {n_layers}")

    frame_rng = np.random.default_rng([cfg.seed, _STREAM_ORACLE, frame])
    corrupt_rng = np.random.default_rng([cfg.seed, _STREAM_CORRUPT, frame])

    states = scene.states_at(frame)
    present = sorted(states.items())

    # tracking sets recognize their target by anchor overlap, not by the
    # tracker's identity counter (identities diverge from scene ids as
    # soon as a track dies or objects enter out of order); the gate is
    # any positive overlap because one frame of motion can drop a small
    # box below IoU 0.5 even without noise
    recognized: dict[int, SceneFrame] = {}
    trk_indices = [i for i, s in enumerate(live_sets) if s.role == "tracking"]
    if present and trk_indices:
        trk_candidates = []
        for i in trk_indices:
            anchor = _anchor_box(live_sets[i])
            for k, (_, st) in enumerate(present):
                overlap = iou(anchor, st.box)
                if overlap > 0.0:
                    trk_candidates.append((-overlap, i, k))
        claimed_sets: set[int] = set()
        claimed_objs: set[int] = set()
        for _, i, k in sorted(trk_candidates):
            if i in claimed_sets or k in claimed_objs:
                continue
            recognized[i] = present[k][1]
            claimed_sets.add(i)
            claimed_objs.add(k)
        claimed_ids = {present[k][0] for k in claimed_objs}
    else:
        claimed_ids = set()

    unclaimed = [
        (identity, st.box)
        for identity, st in present
        if st.visible and identity not in claimed_ids
    ]

    det_indices = [i for i, s in enumerate(live_sets) if s.role == "detection"]
    association: dict[int, BoundingBox] = {}
    if unclaimed and det_indices:
        candidates = []
        for i in det_indices:
            anchor = _anchor_box(live_sets[i])
            for k, (identity, box) in enumerate(unclaimed):
                overlap = iou(anchor, box)
                if overlap >= 0.5:
                    candidates.append((-overlap, i, identity, k))
        taken_sets: set[int] = set()
        taken_objs: set[int] = set()
        for _, i, identity, k in sorted(candidates):
            if i in taken_sets or k in taken_objs:
                continue
            association[i] = unclaimed[k][1]
            taken_sets.add(i)
            taken_objs.add(k)
        free_sets = [i for i in det_indices if i not in taken_sets]
        free_objs = [k for k in range(len(unclaimed)) if k not in taken_objs]
        for i, k in zip(free_sets, free_objs):
            association[i] = unclaimed[k][1]

    # per-layer accumulation; scores are drawn once per set and reused
    layers: list[list[list[tuple[BoundingBox, ClassScores]]]] = [[] for _ in range(n_layers)]
    scales = [cfg.refinement ** l for l in range(n_layers)]
    for i, set_ in enumerate(live_sets):
        ns = set_.n_shadows
        eps = (
            frame_rng.normal(0.0, cfg.box_noise_std, size=(ns, 4))
            if cfg.box_noise_std > 0
            else np.zeros((ns, 4))
        )
        corrupted = corrupt_rng.uniform(size=ns) < cfg.p_corrupt

        target: BoundingBox | None = None
        base = 0.0
        if set_.role == "tracking":
            st = recognized.get(i)
            if st is not None:
                target = st.box
                base = cfg.base_score - (0.0 if st.visible else cfg.occ_drop)
                base = max(base, 0.0)
        elif i in association:
            target = association[i]
            base = cfg.base_score

        if target is None:
            if set_.role == "detection" and float(frame_rng.uniform()) < cfg.fp_rate:
                base = cfg.fp_score
            fp_cx, fp_cy = frame_rng.uniform(0.2, 0.8, size=2)
            fp_w, fp_h = frame_rng.uniform(0.02, 0.1, size=2)
            fallback = BoundingBox(float(fp_cx), float(fp_cy), float(fp_w), float(fp_h))
            if set_.role == "tracking":
                fallback = _anchor_box(set_)

        for l in range(n_layers):
            per_shadow = []
            for j in range(ns):
                score = 0.0 if corrupted[j] else base
                if target is not None:
                    box = _noisy_box(target, eps[j], scales[l])
                else:
                    box = fallback
                per_shadow.append((box, (score,)))
            layers[l].append(per_shadow)
    return layers


def track_scene(
    scene: Scene,
    tracker_cfg: TrackerConfig,
    oracle_cfg: OracleConfig,
) -> Tracklets:
    """Run the oracle-fed tracker over a whole scene.  The oracle seed also
    seeds the tracker's query bank, so one seed pins the entire run."""
    tracker = ShadowTracker(tracker_cfg, seed=oracle_cfg.seed)

    def provider(frame: int, live: list[ShadowSet]):
        return oracle_decode(scene, frame, live, oracle_cfg, tracker_cfg.n_layers)[-1]

    return tracker.run(scene.n_frames, provider)
