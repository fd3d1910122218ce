"""Standalone readers/writers for the pipeline's wire formats.

The trainer talks to the echogram toolkit only through files: ECG1 slice
images, manifest JSONL, labels, and predictions JSONL. These are small
self-contained implementations of the documented layouts, kept free of any
dependency on the producing package.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

ECG_MAGIC = b"ECG1"

_ECG_HEADER = struct.Struct("<4sIIBI")


class FormatError(Exception):
    """A file does not follow its declared layout."""


def read_ecg_planes(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read an ECG1 file into (intensity uint8, lateral float32), both (H, W).

    Lateral bytes are round(v * 255); they are mapped back to [0, 1].
    """
    data = Path(path).read_bytes()
    if data[:4] != ECG_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < _ECG_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    _, w, h, _flags, _pad_start = _ECG_HEADER.unpack_from(data, 0)
    plane = h * w
    body = data[_ECG_HEADER.size :]
    if len(body) < 2 * plane:
        raise FormatError(f"{path}: expected {2 * plane} plane bytes, found {len(body)}")
    intensity = np.frombuffer(body[:plane], dtype=np.uint8).reshape(h, w)
    lateral = (
        np.frombuffer(body[plane : 2 * plane], dtype=np.uint8)
        .reshape(h, w)
        .astype(np.float32)
        / 255.0
    )
    return intensity, lateral


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

    @property
    def clip_id(self) -> str:
        return self.slice_id.rsplit(":", 1)[0]


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


def save_predictions(
    rows: Iterable[tuple[str, int, float, float]], path: str | Path
) -> None:
    """Write (clip_id, x_offset, left_pred, right_pred) rows as JSONL."""
    with open(path, "w") as f:
        for clip_id, x_offset, left_pred, right_pred in rows:
            f.write(
                json.dumps(
                    {
                        "clip_id": clip_id,
                        "x_offset": x_offset,
                        "left_pred": float(left_pred),
                        "right_pred": float(right_pred),
                    }
                )
                + "\n"
            )


def save_labels_jsonl(records: Iterable[ManifestRecord], path: str | Path) -> None:
    """Write manifest records back out in the labels JSONL layout."""
    with open(path, "w") as f:
        for rec in records:
            f.write(
                json.dumps(
                    {
                        "clip_id": rec.clip_id,
                        "x_offset": rec.x_offset,
                        "left": rec.left,
                        "right": rec.right,
                        "source": rec.source,
                    }
                )
                + "\n"
            )
