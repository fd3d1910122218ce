import struct

import numpy as np
import pytest

from conftest import write_ecg, write_manifest
from echotrain.formats import (
    FormatError,
    load_manifest,
    read_ecg_planes,
    save_labels_jsonl,
    save_predictions,
)


def test_read_ecg_planes(tmp_path):
    intensity = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    lateral = np.zeros((3, 4))
    lateral[0, 0] = 0.0
    lateral[1, 2] = 1.0
    lateral[2, 3] = 102 / 255
    lateral[intensity == 0] = 0.0
    path = tmp_path / "s.ecg"
    write_ecg(path, intensity, lateral)
    got_i, got_l = read_ecg_planes(path)
    assert np.array_equal(got_i, intensity)
    assert got_l.dtype == np.float32
    assert got_l[1, 2] == 1.0
    assert abs(got_l[2, 3] - 102 / 255) < 1e-6


def test_read_ecg_bad_magic(tmp_path):
    path = tmp_path / "bad.ecg"
    path.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(FormatError, match="magic"):
        read_ecg_planes(path)


def test_read_ecg_truncated(tmp_path):
    path = tmp_path / "short.ecg"
    path.write_bytes(struct.pack("<4sIIBI", b"ECG1", 4, 4, 0, 0) + b"\x00" * 5)
    with pytest.raises(FormatError, match="plane"):
        read_ecg_planes(path)


def test_load_manifest(tmp_path):
    path = tmp_path / "m.jsonl"
    write_manifest(path, [("clipA", 200, "a.ecg", 1, 2, "train")])
    records = load_manifest(path)
    assert len(records) == 1
    rec = records[0]
    assert rec.slice_id == "clipA:000200"
    assert rec.clip_id == "clipA"
    assert (rec.left, rec.right) == (1, 2)
    assert rec.split == "train"


def test_save_predictions_layout(tmp_path):
    path = tmp_path / "p.jsonl"
    save_predictions([("clipA", 0, 0.5, 1.25)], path)
    import json

    rec = json.loads(path.read_text().splitlines()[0])
    assert rec == {
        "clip_id": "clipA",
        "x_offset": 0,
        "left_pred": 0.5,
        "right_pred": 1.25,
    }


def test_save_labels_layout(tmp_path):
    manifest = tmp_path / "m.jsonl"
    write_manifest(manifest, [("clipA", 0, "a.ecg", 2, 0, "train")])
    labels_path = tmp_path / "l.jsonl"
    save_labels_jsonl(load_manifest(manifest), labels_path)
    import json

    rec = json.loads(labels_path.read_text().splitlines()[0])
    assert rec == {
        "clip_id": "clipA",
        "x_offset": 0,
        "left": 2,
        "right": 0,
        "source": "synthetic",
    }
