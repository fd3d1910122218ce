"""Normalized MAE, locally and through the pipeline's eval CLI.

The local implementation exists for environments without the pipeline CLI
installed; when `echokit` is on PATH the two are interchangeable (asserted in
tests) and the CLI is preferred for scoring saved prediction files.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence


@dataclass(frozen=True)
class NmaeReport:
    n_clips: int
    total_nmae: float | None
    left_nmae: float | None
    right_nmae: float | None
    total_error: float
    total_target: int


def nmae_local(
    predictions: Sequence[tuple[float, float]],
    targets: Sequence[tuple[int, int]],
) -> NmaeReport:
    """Sum of absolute count errors over sum of true counts, positionally
    joined. Zero-denominator breakdowns are None."""
    if len(predictions) != len(targets):
        raise ValueError(
            f"prediction/target length mismatch: {len(predictions)} vs {len(targets)}"
        )
    err_left = sum(abs(p[0] - t[0]) for p, t in zip(predictions, targets))
    err_right = sum(abs(p[1] - t[1]) for p, t in zip(predictions, targets))
    sum_left = sum(t[0] for t in targets)
    sum_right = sum(t[1] for t in targets)
    total = sum_left + sum_right
    return NmaeReport(
        n_clips=len(targets),
        total_nmae=(err_left + err_right) / total if total > 0 else None,
        left_nmae=err_left / sum_left if sum_left > 0 else None,
        right_nmae=err_right / sum_right if sum_right > 0 else None,
        total_error=err_left + err_right,
        total_target=total,
    )


def eval_cli_available() -> bool:
    return shutil.which("echokit") is not None


def nmae_via_cli(predictions_path: str | Path, labels_path: str | Path) -> NmaeReport:
    """Score a predictions file with `echokit eval`."""
    with tempfile.TemporaryDirectory() as tmp:
        report_path = Path(tmp) / "report.json"
        result = subprocess.run(
            [
                "echokit",
                "eval",
                "--pred",
                str(predictions_path),
                "--labels",
                str(labels_path),
                "--report",
                str(report_path),
            ],
            capture_output=True,
            text=True,
        )
        if result.returncode != 0:
            raise RuntimeError(f"echokit eval failed: {result.stderr.strip()}")
        doc = json.loads(report_path.read_text())
    return NmaeReport(
        n_clips=int(doc["n_clips"]),
        total_nmae=doc["total_nmae"],
        left_nmae=doc["left_nmae"],
        right_nmae=doc["right_nmae"],
        total_error=float(doc["total_error"]),
        total_target=int(doc["total_target"]),
    )
