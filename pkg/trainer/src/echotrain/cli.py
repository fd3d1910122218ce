"""Command-line interface: `echotrain fit` and `echotrain predict`."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .predict import predict
from .train import TrainConfig, fit


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echotrain",
        description="Train and run the echogram count regressor.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fit", help="train from a manifest; writes best.pt + log")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--orientation",
        choices=("time-wide", "range-wide"),
        default="time-wide",
        help="which slice axis maps onto the wide input axis",
    )
    p.add_argument("--input-height", type=int, default=200)
    p.add_argument("--input-width", type=int, default=800)
    p.add_argument("--target-nmae", type=float, default=None)
    p.add_argument("--pretrained", action="store_true")
    p.set_defaults(cmd="fit")

    p = sub.add_parser("predict", help="write predictions JSONL for a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=64)
    p.set_defaults(cmd="predict")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "fit":
            config = TrainConfig(
                manifest=args.manifest,
                out_dir=args.out,
                learning_rate=args.lr,
                batch_size=args.batch_size,
                max_epochs=args.epochs,
                patience=args.patience,
                seed=args.seed,
                orientation=args.orientation,
                input_size=(args.input_height, args.input_width),
                target_nmae=args.target_nmae,
                pretrained=args.pretrained,
            )
            result = fit(config)
            nmae = result.best_val_nmae
            print(
                f"best epoch {result.best_epoch}: "
                f"val nMAE {'undefined' if nmae is None else f'{nmae:.4f}'} "
                f"-> {result.model_path}"
            )
        else:
            n = predict(args.model, args.manifest, args.out, args.batch_size)
            print(f"wrote {n} prediction(s) to {args.out}")
        return 0
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
