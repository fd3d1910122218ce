"""Batch inference: manifest slices to predictions JSONL."""

from __future__ import annotations

from pathlib import Path

import torch
from torch.utils.data import DataLoader

from .data import SliceDataset
from .formats import load_manifest, save_predictions
from .train import load_checkpoint


def predict(
    model_path: str | Path,
    manifest_path: str | Path,
    out_path: str | Path,
    batch_size: int = 64,
) -> int:
    """Run the model over every manifest slice and write predictions JSONL.

    Output order follows the manifest. Returns the number of records written.
    The head's ReLU guarantees non-negative predictions.
    """
    model, config = load_checkpoint(model_path)
    records = load_manifest(manifest_path)
    missing = [r for r in records if not Path(r.path).exists()]
    if missing:
        raise FileNotFoundError(
            f"slice file missing for {missing[0].slice_id}: {missing[0].path}"
        )
    dataset = SliceDataset(
        records,
        input_size=tuple(config["input_size"]),
        orientation=config["orientation"],
    )
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False)
    rows = []
    index = 0
    with torch.no_grad():
        for x, _ in loader:
            out = model(x)
            for left_pred, right_pred in out:
                rec = records[index]
                rows.append(
                    (rec.clip_id, rec.x_offset, float(left_pred), float(right_pred))
                )
                index += 1
    save_predictions(rows, out_path)
    return len(rows)
