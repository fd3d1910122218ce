"""Trajectory-to-count conversion, upstream orientation, and nMAE scoring.

A trajectory counts as a left- or right-traveling fish only when its start
and end points lie strictly on opposite sides of the vertical centerline
x = 0.5. The count is charged to the time window containing the frame at
which the track first crosses the centerline (linear interpolation between
consecutive points). Clips are oriented so that right-moving fish travel
upstream before counting.

nMAE = sum of per-window absolute count errors / sum of true counts, with
separate left (downstream) and right (upstream) breakdowns. A breakdown with
a zero denominator is reported as undefined (None), which is distinct from 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import JoinError, ValidationError
from .sonar_format import Side

SOURCES = ("strong", "weak", "synthetic")

CENTERLINE = 0.5


@dataclass(frozen=True)
class TrackPoint:
    frame: int
    x: float
    y: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.x <= 1.0:
            raise ValidationError(f"point x must be in [0, 1], got {self.x}")
        if not 0.0 <= self.y <= 1.0:
            raise ValidationError(f"point y must be in [0, 1], got {self.y}")


@dataclass(frozen=True)
class Track:
    id: str
    points: tuple[TrackPoint, ...]

    def __post_init__(self) -> None:
        points = tuple(self.points)
        object.__setattr__(self, "points", points)
        if len(points) < 1:
            raise ValidationError(f"track {self.id!r} must have at least one point")
        frames = [p.frame for p in points]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValidationError(f"track {self.id!r} frames must be strictly increasing")


@dataclass(frozen=True)
class TrackSet:
    clip_id: str
    upstream_side: Side
    tracks: tuple[Track, ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "upstream_side", Side.parse(self.upstream_side))
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        ids = [t.id for t in self.tracks]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate track ids: {dupes}")


@dataclass(frozen=True)
class CountLabel:
    clip_id: str
    x_offset: int
    left: int
    right: int
    source: str = "weak"

    def __post_init__(self) -> None:
        if self.left < 0 or self.right < 0:
            raise ValidationError(
                f"counts must be >= 0, got ({self.left}, {self.right})"
            )
        if self.source not in SOURCES:
            raise ValidationError(
                f"source must be one of {SOURCES}, got {self.source!r}"
            )

    @property
    def total(self) -> int:
        return self.left + self.right


@dataclass(frozen=True)
class Prediction:
    clip_id: str
    x_offset: int
    left_pred: float
    right_pred: float

    def __post_init__(self) -> None:
        for name in ("left_pred", "right_pred"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class EvalReport:
    n_clips: int
    total_nmae: float | None
    left_nmae: float | None
    right_nmae: float | None
    total_error: float
    total_target: int

    def to_dict(self) -> dict:
        return {
            "n_clips": self.n_clips,
            "total_nmae": self.total_nmae,
            "left_nmae": self.left_nmae,
            "right_nmae": self.right_nmae,
            "total_error": self.total_error,
            "total_target": self.total_target,
        }


def orient(tracks: TrackSet) -> TrackSet:
    """Normalize a track set so that rightward motion is upstream.

    Mirrors every x when the upstream side is left; idempotent.
    """
    if tracks.upstream_side is Side.RIGHT:
        return tracks
    mirrored = tuple(
        Track(
            t.id,
            tuple(TrackPoint(p.frame, 1.0 - p.x, p.y) for p in t.points),
        )
        for t in tracks.tracks
    )
    return replace(tracks, upstream_side=Side.RIGHT, tracks=mirrored)


def _first_crossing_frame(points: Sequence[TrackPoint]) -> float:
    """Frame at which the piecewise-linear track first reaches x = 0.5."""
    prev = points[0]
    for cur in points[1:]:
        a = prev.x - CENTERLINE
        b = cur.x - CENTERLINE
        if b == 0.0:
            return float(cur.frame)
        if (a < 0.0 < b) or (b < 0.0 < a):
            return prev.frame + (CENTERLINE - prev.x) * (cur.frame - prev.frame) / (
                cur.x - prev.x
            )
        prev = cur
    raise ValidationError("track does not cross the centerline")


def tracks_to_counts(
    tracks: TrackSet,
    window: int,
    total_frames: int,
    source: str = "weak",
) -> list[CountLabel]:
    """Convert oriented tracks into per-window (left, right) count labels.

    Windows tile [0, total_frames) with the given width; every window gets a
    label, zero counts included. A track whose start and end straddle the
    centerline is charged to the window containing its first crossing frame;
    tracks that start or end exactly on the centerline are uncounted.
    """
    if tracks.upstream_side is not Side.RIGHT:
        raise ValidationError(
            "tracks must be oriented (upstream_side == right) before counting; "
            "apply orient() first"
        )
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if total_frames < 1:
        raise ValidationError(f"total_frames must be >= 1, got {total_frames}")
    n_windows = -(-total_frames // window)
    left = [0] * n_windows
    right = [0] * n_windows
    for track in tracks.tracks:
        x_start = track.points[0].x
        x_end = track.points[-1].x
        if x_start < CENTERLINE < x_end:
            moving_right = True
        elif x_end < CENTERLINE < x_start:
            moving_right = False
        else:
            continue
        crossing = _first_crossing_frame(track.points)
        w = min(max(int(crossing // window), 0), n_windows - 1)
        if moving_right:
            right[w] += 1
        else:
            left[w] += 1
    return [
        CountLabel(tracks.clip_id, w * window, left[w], right[w], source)
        for w in range(n_windows)
    ]


def nmae(
    predictions: Iterable[Prediction], labels: Iterable[CountLabel]
) -> EvalReport:
    """Score predictions against labels joined on (clip_id, x_offset).

    Predictions are used as-is (real-valued, no rounding). Every label must
    have exactly one prediction; extra predictions without a matching label
    are ignored.
    """
    by_key: dict[tuple[str, int], Prediction] = {}
    for p in predictions:
        key = (p.clip_id, p.x_offset)
        if key in by_key:
            raise JoinError(f"duplicate prediction for {p.clip_id}:{p.x_offset}")
        by_key[key] = p
    seen: set[tuple[str, int]] = set()
    err_left = 0.0
    err_right = 0.0
    sum_left = 0
    sum_right = 0
    n = 0
    for lab in labels:
        key = (lab.clip_id, lab.x_offset)
        if key in seen:
            raise JoinError(f"duplicate label for {lab.clip_id}:{lab.x_offset}")
        seen.add(key)
        pred = by_key.get(key)
        if pred is None:
            raise JoinError(f"missing prediction for {lab.clip_id}:{lab.x_offset}")
        err_left += abs(pred.left_pred - lab.left)
        err_right += abs(pred.right_pred - lab.right)
        sum_left += lab.left
        sum_right += lab.right
        n += 1
    total = sum_left + sum_right
    return EvalReport(
        n_clips=n,
        total_nmae=(err_left + err_right) / total if total > 0 else None,
        left_nmae=err_left / sum_left if sum_left > 0 else None,
        right_nmae=err_right / sum_right if sum_right > 0 else None,
        total_error=err_left + err_right,
        total_target=total,
    )


# ---------------------------------------------------------------------------
# Wire formats: tracks JSON, labels JSONL, predictions JSONL.


def save_tracks(tracks: TrackSet, path: str | Path) -> None:
    doc: dict = {
        "clip_id": tracks.clip_id,
        "upstream_side": str(tracks.upstream_side),
        "tracks": [
            {
                "id": t.id,
                "points": [
                    {"frame": p.frame, "x": p.x, "y": p.y} for p in t.points
                ],
            }
            for t in tracks.tracks
        ],
    }
    if tracks.warnings:
        doc["warnings"] = list(tracks.warnings)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_tracks(path: str | Path) -> TrackSet:
    doc = json.loads(Path(path).read_text())
    tracks = tuple(
        Track(
            str(t["id"]),
            tuple(
                TrackPoint(int(p["frame"]), float(p["x"]), float(p["y"]))
                for p in t["points"]
            ),
        )
        for t in doc["tracks"]
    )
    return TrackSet(
        clip_id=str(doc["clip_id"]),
        upstream_side=Side.parse(doc["upstream_side"]),
        tracks=tracks,
        warnings=tuple(doc.get("warnings", ())),
    )


def save_labels(labels: Iterable[CountLabel], path: str | Path) -> None:
    with open(path, "w") as f:
        for lab in labels:
            f.write(
                json.dumps(
                    {
                        "clip_id": lab.clip_id,
                        "x_offset": lab.x_offset,
                        "left": lab.left,
                        "right": lab.right,
                        "source": lab.source,
                    }
                )
                + "\n"
            )


def load_labels(path: str | Path) -> list[CountLabel]:
    labels = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        labels.append(
            CountLabel(
                clip_id=str(rec["clip_id"]),
                x_offset=int(rec["x_offset"]),
                left=int(rec["left"]),
                right=int(rec["right"]),
                source=str(rec.get("source", "weak")),
            )
        )
    return labels


def save_predictions(predictions: Iterable[Prediction], path: str | Path) -> None:
    with open(path, "w") as f:
        for p in predictions:
            f.write(
                json.dumps(
                    {
                        "clip_id": p.clip_id,
                        "x_offset": p.x_offset,
                        "left_pred": p.left_pred,
                        "right_pred": p.right_pred,
                    }
                )
                + "\n"
            )


def load_predictions(path: str | Path) -> list[Prediction]:
    preds = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        preds.append(
            Prediction(
                clip_id=str(rec["clip_id"]),
                x_offset=int(rec["x_offset"]),
                left_pred=float(rec["left_pred"]),
                right_pred=float(rec["right_pred"]),
            )
        )
    return preds
