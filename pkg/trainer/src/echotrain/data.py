"""Dataset mapping manifest records to normalized model inputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import torch
import torch.nn.functional as F
from torch.utils.data import Dataset

from .formats import ManifestRecord, read_ecg_planes

ORIENTATIONS = ("time-wide", "range-wide")


def normalize_planes(
    intensity, lateral, input_size: tuple[int, int], orientation: str = "time-wide"
) -> torch.Tensor:
    """Scale, shift, and resize the two channels to model-input form.

    Both channels start in [0, 1] (intensity via /255), are mapped through
    (v - 0.5) / 0.25, and bilinearly resized to ``input_size``. With the
    default "time-wide" orientation the slice's time axis lands on the wide
    output axis; "range-wide" transposes first.
    """
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    x = torch.stack(
        [
            torch.from_numpy(intensity.copy()).float() / 255.0,
            torch.from_numpy(lateral.copy()).float(),
        ]
    )
    x = (x - 0.5) / 0.25
    if orientation == "range-wide":
        x = x.transpose(1, 2)
    return F.interpolate(
        x.unsqueeze(0), size=input_size, mode="bilinear", align_corners=False
    ).squeeze(0)


class SliceDataset(Dataset):
    """Lazy-loading dataset over manifest records.

    Targets are float (left, right) count pairs.
    """

    def __init__(
        self,
        records: Sequence[ManifestRecord],
        input_size: tuple[int, int] = (200, 800),
        orientation: str = "time-wide",
    ):
        if orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
        self.records = list(records)
        self.input_size = tuple(input_size)
        self.orientation = orientation

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index: int):
        rec = self.records[index]
        if not Path(rec.path).exists():
            raise FileNotFoundError(f"slice file missing for {rec.slice_id}: {rec.path}")
        intensity, lateral = read_ecg_planes(rec.path)
        x = normalize_planes(intensity, lateral, self.input_size, self.orientation)
        y = torch.tensor([rec.left, rec.right], dtype=torch.float32)
        return x, y
