"""Train/val/test manifest assembly with split-hygiene checks.

A manifest is a sorted list of per-slice records mixing strongly and weakly
labeled data. Slice ids follow ``{clip_id}:{x_offset:06d}``, so split hygiene
can be enforced at clip granularity: slices of one clip share content and
must never straddle splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .counts import SOURCES
from .errors import ManifestConflictError, ValidationError

SPLITS = ("train", "val", "test")


def slice_id(clip_id: str, x_offset: int) -> str:
    return f"{clip_id}:{x_offset:06d}"


@dataclass(frozen=True)
class SliceEntry:
    """Input record for manifest assembly: one labeled echogram slice."""

    clip_id: str
    x_offset: int
    path: str
    left: int
    right: int
    source: str | None = None  # falls back to the collection's bucket


@dataclass(frozen=True)
class ManifestRecord:
    slice_id: str
    path: str
    x_offset: int
    left: int
    right: int
    source: str
    split: str
    location: str = ""

    def __post_init__(self) -> None:
        if self.left < 0 or self.right < 0:
            raise ValidationError(
                f"counts must be >= 0, got ({self.left}, {self.right})"
            )
        if self.source not in SOURCES:
            raise ValidationError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.split not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}, got {self.split!r}")

    @property
    def clip_id(self) -> str:
        return self.slice_id.rsplit(":", 1)[0]

    @property
    def total(self) -> int:
        return self.left + self.right


def build_manifest(
    strong: Iterable[SliceEntry],
    weak: Iterable[SliceEntry],
    splits: Mapping[str, str],
    locations: Mapping[str, str] | None = None,
) -> list[ManifestRecord]:
    """Concatenate strong and weak collections into one sorted manifest.

    ``splits`` maps clip_id -> train|val|test and must cover every clip.
    Output ordering is by slice_id, so the result is independent of input
    order. Duplicate slice ids (within or across collections) conflict.
    """
    locations = locations or {}
    records: dict[str, ManifestRecord] = {}
    conflicts: set[str] = set()
    for bucket, entries in (("strong", strong), ("weak", weak)):
        for entry in entries:
            sid = slice_id(entry.clip_id, entry.x_offset)
            if sid in records:
                conflicts.add(sid)
                continue
            split = splits.get(entry.clip_id)
            if split is None:
                raise ValidationError(
                    f"clip {entry.clip_id!r} has no split assignment"
                )
            records[sid] = ManifestRecord(
                slice_id=sid,
                path=entry.path,
                x_offset=entry.x_offset,
                left=entry.left,
                right=entry.right,
                source=entry.source or bucket,
                split=split,
                location=locations.get(entry.clip_id, ""),
            )
    if conflicts:
        raise ManifestConflictError(
            f"duplicate slice ids: {sorted(conflicts)}"
        )
    return [records[sid] for sid in sorted(records)]


@dataclass(frozen=True)
class SplitReport:
    ok: bool
    violations: tuple[tuple[str, tuple[str, ...]], ...]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"clip_id": clip, "splits": list(splits)}
                for clip, splits in self.violations
            ],
        }


def check_split_disjoint(manifest: Iterable[ManifestRecord]) -> SplitReport:
    """Verify no clip contributes slices to more than one split."""
    seen: dict[str, set[str]] = {}
    for rec in manifest:
        seen.setdefault(rec.clip_id, set()).add(rec.split)
    violations = tuple(
        (clip, tuple(sorted(splits)))
        for clip, splits in sorted(seen.items())
        if len(splits) > 1
    )
    return SplitReport(ok=not violations, violations=violations)


def class_balance(manifest: Iterable[ManifestRecord]) -> dict:
    """Exact per-split (and per-source) count sums and zero-fish image tallies."""

    def bucket() -> dict:
        return {"images": 0, "left": 0, "right": 0, "zero_images": 0}

    summary: dict = {
        split: {**bucket(), "sources": {}} for split in SPLITS
    }
    for rec in manifest:
        for target in (
            summary[rec.split],
            summary[rec.split]["sources"].setdefault(rec.source, bucket()),
        ):
            target["images"] += 1
            target["left"] += rec.left
            target["right"] += rec.right
            if rec.total == 0:
                target["zero_images"] += 1
    return summary


# ---------------------------------------------------------------------------
# Manifest JSONL.


def save_manifest(manifest: Iterable[ManifestRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for rec in manifest:
            f.write(
                json.dumps(
                    {
                        "slice_id": rec.slice_id,
                        "path": rec.path,
                        "x_offset": rec.x_offset,
                        "left": rec.left,
                        "right": rec.right,
                        "source": rec.source,
                        "split": rec.split,
                        "location": rec.location,
                    }
                )
                + "\n"
            )


def load_manifest(path: str | Path) -> list[ManifestRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        records.append(
            ManifestRecord(
                slice_id=str(rec["slice_id"]),
                path=str(rec["path"]),
                x_offset=int(rec["x_offset"]),
                left=int(rec["left"]),
                right=int(rec["right"]),
                source=str(rec["source"]),
                split=str(rec["split"]),
                location=str(rec.get("location", "")),
            )
        )
    return records
