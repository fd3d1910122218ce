"""Training loop: MSE regression with early stopping on validation nMAE."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .data import ORIENTATIONS, SliceDataset
from .formats import load_manifest
from .metrics import NmaeReport, nmae_local
from .model import CountRegressor


@dataclass(frozen=True)
class TrainConfig:
    manifest: str
    out_dir: str
    learning_rate: float = 1e-5
    batch_size: int = 256
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    orientation: str = "time-wide"
    input_size: tuple[int, int] = (200, 800)
    target_nmae: float | None = None  # stop once validation reaches this
    pretrained: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(
                f"orientation must be one of {ORIENTATIONS}, got {self.orientation!r}"
            )
        object.__setattr__(self, "input_size", tuple(self.input_size))


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float
    val_nmae: float | None
    is_best: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class FitResult:
    model_path: Path
    best_epoch: int
    best_val_nmae: float | None
    best_val_mse: float
    log: list[EpochStats] = field(default_factory=list)
    stopped_early: bool = False


class BestTracker:
    """Keeps the checkpoint with the lowest validation score seen so far.

    The score is val nMAE when defined; val MSE breaks the tie when nMAE is
    undefined (zero true counts). Selection is monotone: the tracked best
    never regresses to a worse score.
    """

    def __init__(self) -> None:
        self.best_key: tuple[float, float] | None = None
        self.best_epoch = -1
        self.epochs_since_best = 0

    def update(self, epoch: int, val_nmae: float | None, val_mse: float) -> bool:
        key = (val_nmae if val_nmae is not None else math.inf, val_mse)
        if self.best_key is None or key < self.best_key:
            self.best_key = key
            self.best_epoch = epoch
            self.epochs_since_best = 0
            return True
        self.epochs_since_best += 1
        return False


def _evaluate(model, loader, device) -> tuple[list[tuple[float, float]], float]:
    model.eval()
    predictions: list[tuple[float, float]] = []
    sq_err = 0.0
    n = 0
    with torch.no_grad():
        for x, y in loader:
            out = model(x.to(device))
            sq_err += float(((out - y.to(device)) ** 2).sum())
            n += out.numel()
            predictions += [(float(l), float(r)) for l, r in out.cpu()]
    return predictions, sq_err / max(n, 1)


def fit(config: TrainConfig) -> FitResult:
    """Train a count regressor from a manifest and persist the best checkpoint.

    The train split feeds the optimizer; validation uses the val split when
    present, otherwise the train split itself (overfit/sanity mode). Writes
    ``best.pt``, ``config.json``, and a per-epoch ``log.jsonl`` into
    ``config.out_dir``.
    """
    records = load_manifest(config.manifest)
    train_records = [r for r in records if r.split == "train"]
    if not train_records:
        raise ValueError(f"manifest {config.manifest} has an empty train split")
    val_records = [r for r in records if r.split == "val"] or train_records

    torch.manual_seed(config.seed)
    np.random.seed(config.seed % 2**32)
    device = torch.device("cpu")

    train_ds = SliceDataset(train_records, config.input_size, config.orientation)
    val_ds = SliceDataset(val_records, config.input_size, config.orientation)
    train_loader = DataLoader(
        train_ds,
        batch_size=config.batch_size,
        shuffle=True,
        generator=torch.Generator().manual_seed(config.seed),
    )
    val_loader = DataLoader(val_ds, batch_size=config.batch_size, shuffle=False)
    val_targets = [(r.left, r.right) for r in val_records]

    model = CountRegressor(pretrained=config.pretrained).to(device)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(dataclasses.asdict(config), indent=2) + "\n"
    )
    model_path = out_dir / "best.pt"

    tracker = BestTracker()
    log: list[EpochStats] = []
    best_state = None
    best_report: NmaeReport | None = None
    stopped_early = False

    with open(out_dir / "log.jsonl", "w") as log_file:
        for epoch in range(config.max_epochs):
            model.train()
            sq_err = 0.0
            n = 0
            for x, y in train_loader:
                optimizer.zero_grad()
                out = model(x.to(device))
                loss = torch.nn.functional.mse_loss(out, y.to(device))
                if not torch.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite training loss at epoch {epoch} "
                        f"(lr={config.learning_rate}); aborting"
                    )
                loss.backward()
                optimizer.step()
                sq_err += float(loss.detach()) * out.numel()
                n += out.numel()
            train_mse = sq_err / max(n, 1)

            val_preds, val_mse = _evaluate(model, val_loader, device)
            report = nmae_local(val_preds, val_targets)
            is_best = tracker.update(epoch, report.total_nmae, val_mse)
            if is_best:
                best_state = {
                    k: v.detach().clone() for k, v in model.state_dict().items()
                }
                best_report = report
            stats = EpochStats(epoch, train_mse, val_mse, report.total_nmae, is_best)
            log.append(stats)
            log_file.write(json.dumps(stats.to_dict()) + "\n")
            log_file.flush()

            reached_target = (
                config.target_nmae is not None
                and report.total_nmae is not None
                and report.total_nmae < config.target_nmae
            )
            out_of_patience = tracker.epochs_since_best >= config.patience
            if reached_target or out_of_patience:
                stopped_early = True
                break

    assert best_state is not None and best_report is not None
    torch.save(
        {
            "state_dict": best_state,
            "config": dataclasses.asdict(config),
            "epoch": tracker.best_epoch,
            "val_nmae": best_report.total_nmae,
        },
        model_path,
    )
    return FitResult(
        model_path=model_path,
        best_epoch=tracker.best_epoch,
        best_val_nmae=best_report.total_nmae,
        best_val_mse=tracker.best_key[1],
        log=log,
        stopped_early=stopped_early,
    )


def load_checkpoint(path: str | Path) -> tuple[CountRegressor, dict]:
    """Restore a trained model and its config echo."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = CountRegressor(pretrained=False)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload["config"]
