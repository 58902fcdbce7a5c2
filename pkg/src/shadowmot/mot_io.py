"""MOTChallenge-format text I/O.

Each line is exactly ten comma-separated fields:
frame, id, bb_left, bb_top, bb_width, bb_height, conf, x, y, z.
Boxes on disk are pixel top-left format; in memory they become center-format
boxes in pixel units.  Reals are serialized with shortest round-trip
precision, so reading back what was written recovers the exact values.

Parsing is strict: wrong field count, non-numeric fields, frames below 1,
and duplicate (frame, id) pairs all raise with the 1-based line number.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

from .geometry import BoundingBox, to_pixel
from .tracker import Tracklets

__all__ = [
    "MotLine",
    "MotFormatError",
    "parse_mot_line",
    "format_mot_line",
    "read_mot",
    "format_mot",
    "write_mot",
]

_FIELDS = ("frame", "id", "bb_left", "bb_top", "bb_width", "bb_height", "conf", "x", "y", "z")


class MotLine(NamedTuple):
    frame: int
    id: int
    bb_left: float
    bb_top: float
    bb_width: float
    bb_height: float
    conf: float
    x: float = -1.0
    y: float = -1.0
    z: float = -1.0


class MotFormatError(ValueError):
    """Malformed line in a MOT-format file; message carries the line number."""


def parse_mot_line(text: str, line_no: int) -> MotLine:
    parts = text.split(",")
    if len(parts) != 10:
        raise MotFormatError(f"line {line_no}: expected 10 fields, got {len(parts)}")
    values = []
    for name, raw in zip(_FIELDS, parts):
        raw = raw.strip()
        try:
            if name in ("frame", "id"):
                values.append(int(raw))
            else:
                v = float(raw)
                if not math.isfinite(v):
                    raise ValueError
                values.append(v)
        except ValueError:
            kind = "integer" if name in ("frame", "id") else "number"
            raise MotFormatError(
                f"line {line_no}: field '{name}': invalid {kind} {raw!r}"
            ) from None
    line = MotLine(*values)
    if line.frame < 1:
        raise MotFormatError(f"line {line_no}: field 'frame': must be >= 1, got {line.frame}")
    if line.bb_width < 0 or line.bb_height < 0:
        raise MotFormatError(f"line {line_no}: negative box extent")
    return line


def _fmt(v: float) -> str:
    return repr(float(v))


def format_mot_line(line: MotLine) -> str:
    return ",".join(
        [
            str(line.frame),
            str(line.id),
            _fmt(line.bb_left),
            _fmt(line.bb_top),
            _fmt(line.bb_width),
            _fmt(line.bb_height),
            _fmt(line.conf),
            _fmt(line.x),
            _fmt(line.y),
            _fmt(line.z),
        ]
    )


def read_mot(path: str) -> Tracklets:
    """Parse a results or ground-truth file into pixel-space tracklets.

    Whitespace-only lines are ignored.  (frame, id) pairs must be unique,
    which rules out detection files full of id -1 rows; those are not
    tracklets.
    """
    with open(path, "r", encoding="ascii") as fh:
        raw_lines = fh.read().splitlines()
    entries = []
    seen: set[tuple[int, int]] = set()
    for line_no, text in enumerate(raw_lines, start=1):
        if not text.strip():
            continue
        line = parse_mot_line(text, line_no)
        key = (line.frame, line.id)
        if key in seen:
            raise MotFormatError(
                f"line {line_no}: duplicate (frame, id) = ({line.frame}, {line.id})"
            )
        seen.add(key)
        box = BoundingBox(
            cx=line.bb_left + line.bb_width / 2,
            cy=line.bb_top + line.bb_height / 2,
            w=line.bb_width,
            h=line.bb_height,
        )
        entries.append((line.id, line.frame, box, line.conf))
    return Tracklets.from_entries(entries)


def format_mot(
    tracklets: Tracklets, image_size: Optional[tuple[int, int]] = None
) -> str:
    """Serialize tracklets, sorted by (frame, id), one line per box.

    With ``image_size`` the boxes are treated as normalized and scaled to
    pixels; without it they are written in whatever units they carry, which
    is the mode that makes write-after-read value-preserving.
    """
    rows: list[MotLine] = []
    for identity, track in tracklets:
        for obs in track:
            if image_size is not None:
                pb = to_pixel(obs.box, image_size[0], image_size[1])
                left, top, width, height = pb.left, pb.top, pb.width, pb.height
            else:
                left = obs.box.cx - obs.box.w / 2
                top = obs.box.cy - obs.box.h / 2
                width, height = obs.box.w, obs.box.h
            rows.append(
                MotLine(obs.frame, identity, left, top, width, height, obs.score)
            )
    rows.sort(key=lambda r: (r.frame, r.id))
    return "".join(format_mot_line(r) + "\n" for r in rows)


def write_mot(
    tracklets: Tracklets,
    path: str,
    image_size: Optional[tuple[int, int]] = None,
) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_mot(tracklets, image_size))
