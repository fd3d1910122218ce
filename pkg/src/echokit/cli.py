"""Command-line entry point: synth -> echogram -> slice -> label -> manifest -> eval.

Every subcommand validates its numeric flags before any work begins, writes
its outputs deterministically (same inputs, same bytes), and emits a
RunMetadata JSON next to its outputs. Timestamps and durations live only in
that metadata file so the data outputs stay byte-reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from . import __version__, augment, counts, dataset, echogram, preprocess, synth
from .errors import EchokitError, ValidationError
from .sonar_format import read_clip, write_clip

# Reference sweep grid: (alpha0, alpha1, alpha2, size_thresh), from no
# filtering at all up to aggressive cleaning.
SWEEP_GRID = (
    (0.0, 0.0, 0.0, 0.0),
    (20.0, 0.0, 0.0, 0.0),
    (20.0, 40.0, 60.0, 100.0),
    (20.0, 40.0, 100.0, 120.0),
)


@dataclass(frozen=True)
class RunMetadata:
    tool_version: str
    subcommand: str
    params: dict
    inputs: list[str]
    outputs: list[str]
    duration_s: float

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "subcommand": self.subcommand,
            "params": self.params,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_s": self.duration_s,
        }


def _metadata_path(primary_output: Path) -> Path:
    if primary_output.is_dir():
        return primary_output / "run_metadata.json"
    return primary_output.with_name(primary_output.name + ".run.json")


def _write_metadata(
    args: argparse.Namespace,
    started: float,
    inputs: list[str],
    outputs: list[str],
    primary_output: Path,
) -> None:
    params = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k != "func" and not k.startswith("_")
    }
    meta = RunMetadata(
        tool_version=__version__,
        subcommand=args.subcommand,
        params=params,
        inputs=sorted(inputs),
        outputs=sorted(outputs),
        duration_s=round(time.monotonic() - started, 6),
    )
    _metadata_path(primary_output).write_text(json.dumps(meta.to_dict(), indent=2) + "\n")


def _jobs(args: argparse.Namespace) -> int:
    if getattr(args, "jobs", None):
        return max(int(args.jobs), 1)
    env = os.environ.get("ECHOKIT_JOBS", "")
    return max(int(env), 1) if env.isdigit() and env != "0" else 1


def _preprocess_config(args: argparse.Namespace) -> preprocess.PreprocessConfig:
    return preprocess.PreprocessConfig(
        alpha0=args.alpha0,
        alpha1=args.alpha1,
        alpha2=args.alpha2,
        size_thresh=args.size_thresh,
        reference_range=args.ref_range,
        sweep=args.sweep_config,
    )


def _add_preprocess_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha0", type=float, default=20.0)
    p.add_argument("--alpha1", type=float, default=40.0)
    p.add_argument("--alpha2", type=float, default=60.0)
    p.add_argument("--size-thresh", type=float, default=100.0)
    p.add_argument("--ref-range", type=float, default=5.0)
    p.add_argument(
        "--sweep-config",
        action="store_true",
        help="allow degenerate threshold orderings (parameter sweeps only)",
    )


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_synth(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if (args.config is None) == (args.suite is None):
        raise ValidationError("pass exactly one of --config or --suite")
    if args.config is not None:
        config = synth.parse_synth_config(args.config)
        clip_id = args.clip_id or Path(args.config).stem
        generated = [synth.synth_clip(config, window=args.window, clip_id=clip_id)]
        inputs = [str(args.config)]
    else:
        generated = synth.synth_suite(args.suite, seed=args.seed, window=args.window)
        inputs = []
    outputs = []
    all_labels: list[counts.CountLabel] = []
    for clip, tracks, labels in generated:
        clip_path = out_dir / f"{tracks.clip_id}.svc"
        tracks_path = out_dir / f"{tracks.clip_id}.tracks.json"
        write_clip(clip, clip_path)
        counts.save_tracks(tracks, tracks_path)
        outputs += [str(clip_path), str(tracks_path)]
        all_labels += labels
    labels_path = out_dir / "labels.jsonl"
    counts.save_labels(all_labels, labels_path)
    outputs.append(str(labels_path))
    _write_metadata(args, started, inputs, outputs, out_dir)
    print(f"wrote {len(generated)} clip(s) to {out_dir}")
    return 0


def _echogram_one(
    clip_path: Path,
    out_path: Path,
    config: preprocess.PreprocessConfig,
    orient_upstream: bool = True,
) -> None:
    clip = read_clip(clip_path)
    e = echogram.build_echogram(
        clip, config, clip_id=clip_path.stem, orient_upstream=orient_upstream
    )
    echogram.write_ecg(e, out_path)


def cmd_echogram(args: argparse.Namespace) -> int:
    started = time.monotonic()
    config = _preprocess_config(args)
    orient = not args.no_orient
    in_path = Path(getattr(args, "in"))
    out_path = Path(args.out)
    if in_path.is_dir():
        out_path.mkdir(parents=True, exist_ok=True)
        clips = sorted(in_path.glob("*.svc"))
        if not clips:
            raise ValidationError(f"no .svc clips under {in_path}")
        targets = [out_path / f"{c.stem}.ecg" for c in clips]
        with ThreadPoolExecutor(max_workers=_jobs(args)) as pool:
            list(
                pool.map(
                    lambda cp: _echogram_one(cp[0], cp[1], config, orient),
                    zip(clips, targets),
                )
            )
        _write_metadata(args, started, [str(c) for c in clips], [str(t) for t in targets], out_path)
    else:
        _echogram_one(in_path, out_path, config, orient)
        _write_metadata(args, started, [str(in_path)], [str(out_path)], out_path)
    return 0


def cmd_slice(args: argparse.Namespace) -> int:
    started = time.monotonic()
    in_path = Path(getattr(args, "in"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    clip_id = in_path.stem
    full = echogram.read_ecg(in_path, clip_id=clip_id)
    e = echogram.Echogram(
        clip_id=clip_id, intensity=full.intensity, lateral=full.lateral
    )
    outputs = []
    for s in echogram.slice_echogram(e, window=args.window, stride=args.stride):
        path = out_dir / f"{clip_id}_x{s.x_offset:06d}.ecg"
        echogram.write_ecg(s, path)
        outputs.append(str(path))
    _write_metadata(args, started, [str(in_path)], outputs, out_dir)
    print(f"wrote {len(outputs)} slice(s) to {out_dir}")
    return 0


_AUGMENT_OPS = {
    "vflip": augment.vflip,
    "hflip": augment.hflip_naive,
    "rhflip": augment.hflip_realistic,
}


def _load_sidecar(path: str | None) -> list[counts.CountLabel]:
    return counts.load_labels(path) if path else []


def cmd_augment(args: argparse.Namespace) -> int:
    started = time.monotonic()
    in_path = Path(getattr(args, "in"))
    out_path = Path(args.out)
    op = _AUGMENT_OPS[args.op]
    s = echogram.read_ecg(in_path, clip_id=in_path.stem)
    labels = _load_sidecar(args.labels)
    placeholder = counts.CountLabel(in_path.stem, 0, 0, 0, "weak")
    flipped = op(augment.LabeledSlice(s, labels[0] if labels else placeholder))
    echogram.write_ecg(flipped.slice, out_path)
    outputs = [str(out_path)]
    if args.labels:
        if not args.labels_out:
            raise ValidationError("--labels requires --labels-out")
        new_labels = [
            op(augment.LabeledSlice(s, lab)).label for lab in labels
        ]
        counts.save_labels(new_labels, args.labels_out)
        outputs.append(str(args.labels_out))
    _write_metadata(args, started, [str(in_path)], outputs, out_path)
    return 0


def cmd_superpose(args: argparse.Namespace) -> int:
    started = time.monotonic()
    a_path, b_path, out_path = Path(args.a), Path(args.b), Path(args.out)
    sa = echogram.read_ecg(a_path, clip_id=a_path.stem)
    sb = echogram.read_ecg(b_path, clip_id=b_path.stem)
    labels_a = _load_sidecar(args.labels_a)
    labels_b = _load_sidecar(args.labels_b)
    zero = counts.CountLabel(a_path.stem, 0, 0, 0, "weak")
    merged = augment.superpose(
        augment.LabeledSlice(sa, labels_a[0] if labels_a else zero),
        augment.LabeledSlice(sb, labels_b[0] if labels_b else zero),
    )
    echogram.write_ecg(merged.slice, out_path)
    outputs = [str(out_path)]
    if labels_a or labels_b:
        if not args.labels_out:
            raise ValidationError("label sidecars require --labels-out")
        if len(labels_a) != len(labels_b):
            raise ValidationError(
                f"sidecars differ in length: {len(labels_a)} vs {len(labels_b)}"
            )
        summed = [
            augment.superpose(
                augment.LabeledSlice(sa, la), augment.LabeledSlice(sb, lb)
            ).label
            for la, lb in zip(labels_a, labels_b)
        ]
        counts.save_labels(summed, args.labels_out)
        outputs.append(str(args.labels_out))
    _write_metadata(args, started, [str(a_path), str(b_path)], outputs, out_path)
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if args.window < 1:
        raise ValidationError(f"window must be >= 1, got {args.window}")
    if args.frames < 1:
        raise ValidationError(f"frames must be >= 1, got {args.frames}")
    tracks = counts.orient(counts.load_tracks(args.tracks))
    labels = counts.tracks_to_counts(
        tracks, window=args.window, total_frames=args.frames, source=args.source
    )
    counts.save_labels(labels, args.out)
    _write_metadata(args, started, [str(args.tracks)], [str(args.out)], Path(args.out))
    print(f"wrote {len(labels)} window label(s) to {args.out}")
    return 0


def _collect_entries(dir_path: Path) -> list[dataset.SliceEntry]:
    labels_path = dir_path / "labels.jsonl"
    if not labels_path.exists():
        raise ValidationError(f"collection {dir_path} has no labels.jsonl")
    entries = []
    for lab in counts.load_labels(labels_path):
        slice_path = dir_path / f"{lab.clip_id}_x{lab.x_offset:06d}.ecg"
        if not slice_path.exists():
            raise ValidationError(f"missing slice file {slice_path}")
        entries.append(
            dataset.SliceEntry(
                clip_id=lab.clip_id,
                x_offset=lab.x_offset,
                path=str(slice_path),
                left=lab.left,
                right=lab.right,
                source=lab.source,
            )
        )
    return entries


def cmd_manifest(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if not args.strong and not args.weak:
        raise ValidationError("pass at least one of --strong or --weak")
    splits_doc = json.loads(Path(args.splits).read_text())
    splits: dict[str, str] = {}
    for split in dataset.SPLITS:
        for clip_id in splits_doc.get(split, []):
            splits[str(clip_id)] = split
    locations = {str(k): str(v) for k, v in splits_doc.get("locations", {}).items()}
    strong = _collect_entries(Path(args.strong)) if args.strong else []
    weak = _collect_entries(Path(args.weak)) if args.weak else []
    manifest = dataset.build_manifest(strong, weak, splits, locations)
    dataset.save_manifest(manifest, args.out)
    inputs = [str(args.splits)] + [str(d) for d in (args.strong, args.weak) if d]
    _write_metadata(args, started, inputs, [str(args.out)], Path(args.out))
    print(f"wrote {len(manifest)} record(s) to {args.out}")
    return 0


def cmd_manifest_check(args: argparse.Namespace) -> int:
    started = time.monotonic()
    manifest = dataset.load_manifest(getattr(args, "in"))
    report = dataset.check_split_disjoint(manifest)
    doc = {
        "split_disjoint": report.to_dict(),
        "class_balance": dataset.class_balance(manifest),
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
        _write_metadata(
            args, started, [str(getattr(args, "in"))], [str(args.report)], Path(args.report)
        )
    if not report.ok:
        print("split hygiene violated", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.monotonic()
    report = counts.nmae(
        counts.load_predictions(args.pred), counts.load_labels(args.labels)
    )
    text = json.dumps(report.to_dict(), indent=2)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
        _write_metadata(
            args,
            started,
            [str(args.pred), str(args.labels)],
            [str(args.report)],
            Path(args.report),
        )
    return 0


def _sweep_configs(args: argparse.Namespace) -> list[preprocess.PreprocessConfig]:
    if args.configs == "builtin":
        return [
            preprocess.PreprocessConfig(
                alpha0=a0,
                alpha1=a1,
                alpha2=a2,
                size_thresh=st,
                reference_range=args.ref_range,
                sweep=True,
            )
            for a0, a1, a2, st in SWEEP_GRID
        ]
    rows = json.loads(Path(args.configs).read_text())
    return [
        preprocess.PreprocessConfig(
            alpha0=float(r["alpha0"]),
            alpha1=float(r["alpha1"]),
            alpha2=float(r["alpha2"]),
            size_thresh=float(r["size_thresh"]),
            reference_range=float(r.get("reference_range", args.ref_range)),
            sweep=True,
        )
        for r in rows
    ]


def cmd_sweep(args: argparse.Namespace) -> int:
    started = time.monotonic()
    clip_paths = sorted(Path(args.clips).glob("*.svc"))
    if not clip_paths:
        raise ValidationError(f"no .svc clips under {args.clips}")
    configs = _sweep_configs(args)
    nmae_value: float | None = None
    if args.pred and args.labels:
        report = counts.nmae(
            counts.load_predictions(args.pred), counts.load_labels(args.labels)
        )
        nmae_value = report.total_nmae

    def stats_for(config: preprocess.PreprocessConfig) -> tuple[int, int]:
        nonzero = 0
        total = 0
        for path in clip_paths:
            e = echogram.build_echogram(read_clip(path), config, clip_id=path.stem)
            nonzero += int(np.count_nonzero(e.intensity))
            total += e.intensity.size
        return nonzero, total

    with ThreadPoolExecutor(max_workers=_jobs(args)) as pool:
        results = list(pool.map(stats_for, configs))

    out_path = Path(args.out)
    with open(out_path, "w", newline="") as f:
        writer = csv.writer(f)
        header = [
            "alpha0",
            "alpha1",
            "alpha2",
            "size_thresh",
            "reference_range",
            "clips",
            "nonzero_pixels",
            "total_pixels",
            "total_nmae",
        ]
        writer.writerow(header)
        for config, (nonzero, total) in zip(configs, results):
            writer.writerow(
                [
                    config.alpha0,
                    config.alpha1,
                    config.alpha2,
                    config.size_thresh,
                    config.reference_range,
                    len(clip_paths),
                    nonzero,
                    total,
                    "" if nmae_value is None else nmae_value,
                ]
            )
    inputs = [str(p) for p in clip_paths]
    if args.pred:
        inputs += [str(args.pred), str(args.labels)]
    _write_metadata(args, started, inputs, [str(out_path)], out_path)
    print(f"wrote {len(configs)} sweep row(s) to {out_path}")
    return 0


def cmd_export_png(args: argparse.Namespace) -> int:
    started = time.monotonic()
    in_path = Path(getattr(args, "in"))
    s = echogram.read_ecg(in_path, clip_id=in_path.stem)
    bgr = echogram.render_png_array(s)
    if not cv2.imwrite(str(args.out), bgr):
        raise EchokitError(f"failed to write {args.out}")
    _write_metadata(args, started, [str(in_path)], [str(args.out)], Path(args.out))
    return 0


# ---------------------------------------------------------------------------
# Parser wiring.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echokit",
        description="Sonar clips to echograms, count labels, and nMAE evaluation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate synthetic clips with ground truth")
    p.add_argument("--config", help="scenario file (key = value)")
    p.add_argument("--suite", type=int, help="generate N varied scenarios")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--clip-id", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("echogram", help="clean a clip and collapse it to ECG1")
    p.add_argument("--in", required=True, help=".svc file or directory of them")
    p.add_argument("--out", required=True)
    _add_preprocess_flags(p)
    p.add_argument(
        "--no-orient",
        action="store_true",
        help="keep raw beam coordinates instead of normalizing upstream to rightward",
    )
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_echogram)

    p = sub.add_parser("slice", help="cut an echogram into fixed windows")
    p.add_argument("--in", required=True)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--stride", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("augment", help="flip augmentations with label semantics")
    p.add_argument("--op", required=True, choices=sorted(_AUGMENT_OPS))
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default=None, help="sidecar labels JSONL")
    p.add_argument("--labels-out", default=None)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("superpose", help="overlay two echograms, adding counts")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-a", default=None)
    p.add_argument("--labels-b", default=None)
    p.add_argument("--labels-out", default=None)
    p.set_defaults(func=cmd_superpose)

    p = sub.add_parser("label", help="convert tracks to per-window counts")
    p.add_argument("--tracks", required=True)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--source", default="weak", choices=sorted(counts.SOURCES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("manifest", help="assemble a dataset manifest")
    p.add_argument("--strong", default=None, help="dir with labels.jsonl + slices")
    p.add_argument("--weak", default=None, help="dir with labels.jsonl + slices")
    p.add_argument("--splits", required=True, help="JSON: split -> [clip ids]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_manifest)

    p = sub.add_parser("manifest-check", help="split hygiene and class balance")
    p.add_argument("--in", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_manifest_check)

    p = sub.add_parser("eval", help="score predictions with nMAE")
    p.add_argument("--pred", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="echogram stats per preprocessing config")
    p.add_argument("--clips", required=True, help="directory of .svc clips")
    p.add_argument("--configs", default="builtin", help="'builtin' or a JSON file")
    p.add_argument("--ref-range", type=float, default=5.0)
    p.add_argument("--pred", default=None)
    p.add_argument("--labels", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-png", help="debug render: lateral as hue")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_png)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EchokitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
