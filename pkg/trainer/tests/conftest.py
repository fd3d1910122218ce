import json
import shutil
import struct
import subprocess

import numpy as np
import pytest

from echotrain.train import TrainConfig, fit


def echokit(*args):
    result = subprocess.run(
        ["echokit", *map(str, args)], capture_output=True, text=True
    )
    assert result.returncode == 0, f"echokit {args[0]} failed: {result.stderr}"
    return result


def write_ecg(path, intensity, lateral):
    """Minimal ECG1 writer for hand-built test slices."""
    intensity = np.asarray(intensity, dtype=np.uint8)
    h, w = intensity.shape
    lateral_q = np.rint(np.asarray(lateral, dtype=np.float64) * 255).astype(np.uint8)
    head = struct.pack("<4sIIBI", b"ECG1", w, h, 0, 0)
    path.write_bytes(head + intensity.tobytes() + lateral_q.tobytes())


def write_manifest(path, rows):
    """rows: (clip_id, x_offset, slice_path, left, right, split)."""
    with open(path, "w") as f:
        for clip_id, x_offset, slice_path, left, right, split in rows:
            f.write(
                json.dumps(
                    {
                        "slice_id": f"{clip_id}:{x_offset:06d}",
                        "path": str(slice_path),
                        "x_offset": x_offset,
                        "left": left,
                        "right": right,
                        "source": "synthetic",
                        "split": split,
                    }
                )
                + "\n"
            )


def make_tiny_dataset(root, labels, height=16, width=32, seed=0):
    """Hand-built slices with a bright streak per labeled fish."""
    rng = np.random.default_rng(seed)
    rows = []
    for i, (left, right) in enumerate(labels):
        intensity = np.zeros((height, width), dtype=np.uint8)
        lateral = np.zeros((height, width))
        for k in range(left + right):
            r = int(rng.integers(2, height - 2))
            intensity[r] = 200
            ramp = np.linspace(0.1, 0.9, width)
            lateral[r] = ramp if k < right else ramp[::-1]
        lateral[intensity == 0] = 0.0
        slice_path = root / f"tiny{i}_x000000.ecg"
        write_ecg(slice_path, intensity, lateral)
        rows.append((f"tiny{i}", 0, slice_path, left, right, "train"))
    manifest = root / "manifest.jsonl"
    write_manifest(manifest, rows)
    return manifest


@pytest.fixture(scope="session")
def dataset50(tmp_path_factory):
    """50 labeled echogram slices produced end-to-end by the echokit CLI."""
    if shutil.which("echokit") is None:
        pytest.fail("echokit CLI must be installed to build trainer fixtures")
    root = tmp_path_factory.mktemp("trainset")
    suite = root / "suite"
    eco = root / "eco"
    slices = root / "slices"
    echokit("synth", "--suite", 30, "--seed", 77, "--out", suite)
    echokit("echogram", "--in", suite, "--out", eco)
    slices.mkdir()
    for f in sorted(eco.glob("*.ecg")):
        echokit("slice", "--in", f, "--window", 200, "--stride", 200, "--out", slices)
    (slices / "labels.jsonl").write_text((suite / "labels.jsonl").read_text())
    clips = sorted(
        {
            json.loads(line)["clip_id"]
            for line in (suite / "labels.jsonl").read_text().splitlines()
        }
    )
    (root / "splits.json").write_text(json.dumps({"train": clips}))
    echokit(
        "manifest", "--weak", slices, "--splits", root / "splits.json",
        "--out", root / "manifest_all.jsonl",
    )
    lines = (root / "manifest_all.jsonl").read_text().splitlines()
    assert len(lines) >= 50, f"suite produced only {len(lines)} slices"
    (root / "manifest50.jsonl").write_text("\n".join(lines[:50]) + "\n")
    return root


@pytest.fixture(scope="session")
def overfit_run(dataset50, tmp_path_factory):
    """Train on the 50-slice set; shared by the acceptance tests."""
    out_dir = tmp_path_factory.mktemp("overfit")
    config = TrainConfig(
        manifest=str(dataset50 / "manifest50.jsonl"),
        out_dir=str(out_dir),
        learning_rate=7e-4,
        batch_size=10,
        max_epochs=120,
        patience=120,
        seed=0,
        input_size=(48, 192),
        target_nmae=0.01,
    )
    result = fit(config)
    return config, result
