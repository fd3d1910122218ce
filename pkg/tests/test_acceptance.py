"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with -s to see them on success).

Criteria covered:
  1. oracle end-to-end on a 50-clip synthetic suite, exact zero nMAE, < 60 s
  2. nMAE hand-checks (0, 0.5, 0.75) at 1e-12
  3. echogram vs brute-force max/argmax on 100 random clips, bit-exact
  4. preprocess monotonicity + flood-fill keep/drop agreement, exact
  5. augmentation algebra, exact
  6. count rule: mirror invariance + 20 hand-computed crossing windows
  7. SVC1 / ECG1 round-trips on 100 random instances, bytewise
  8. sweep harness: well-formed CSV, noisiest config >= 2x best config pixels
"""

import csv
import time

import numpy as np
import pytest

from conftest import make_header, random_clip
from echokit import counts
from echokit.augment import LabeledSlice, hflip_naive, hflip_realistic, superpose, vflip
from echokit.cli import main as cli_main
from echokit.counts import (
    CountLabel,
    Prediction,
    Track,
    TrackPoint,
    TrackSet,
    nmae,
    orient,
    tracks_to_counts,
    _first_crossing_frame,
)
from echokit.echogram import EchogramSlice, build_echogram, ecg_from_bytes, ecg_to_bytes
from echokit.preprocess import PreprocessConfig, clean_clip, connected_components
from echokit.sonar_format import (
    Clip,
    ClipHeader,
    Side,
    clip_from_bytes,
    clip_to_bytes,
    write_clip,
)
from echokit.synth import SynthConfig, SynthFish, synth_clip, synth_suite
from oracles import echogram_naive, keep_decisions


def report(line):
    print(f"\nACCEPTANCE PASS: {line}")


def test_oracle_end_to_end_zero_nmae():
    started = time.monotonic()
    suite = synth_suite(50, seed=123)
    config = PreprocessConfig()
    predictions = []
    labels = []
    for clip, tracks, _ in suite:
        e = build_echogram(clip, config, clip_id=tracks.clip_id)
        assert e.width == clip.header.frame_count
        clip_labels = tracks_to_counts(
            orient(tracks), window=200, total_frames=clip.header.frame_count,
            source="synthetic",
        )
        labels += clip_labels
        predictions += [
            Prediction(l.clip_id, l.x_offset, float(l.left), float(l.right))
            for l in clip_labels
        ]
    result = nmae(predictions, labels)
    elapsed = time.monotonic() - started
    assert result.total_target > 0
    assert result.total_error == 0.0
    assert result.total_nmae == 0.0
    assert elapsed < 60.0, f"pipeline took {elapsed:.1f}s"
    report(
        f"oracle end-to-end: 50 clips, {result.total_target} fish, "
        f"nMAE == 0 exactly, {elapsed:.1f}s"
    )


def test_nmae_hand_checks():
    tol = 1e-12

    perfect = nmae(
        [Prediction("a", 0, 1.0, 2.0)], [CountLabel("a", 0, 1, 2, "strong")]
    )
    assert abs(perfect.total_nmae - 0.0) <= tol

    half = nmae([Prediction("a", 0, 0.0, 1.0)], [CountLabel("a", 0, 0, 2, "strong")])
    assert abs(half.total_nmae - 0.5) <= tol
    assert abs(half.right_nmae - 0.5) <= tol
    assert half.left_nmae is None

    two = nmae(
        [Prediction("a", 0, 0.0, 1.0), Prediction("b", 0, 1.0, 3.0)],
        [CountLabel("a", 0, 1, 1, "strong"), CountLabel("b", 0, 0, 2, "strong")],
    )
    assert abs(two.total_nmae - 0.75) <= tol
    report("nMAE hand-checks reproduce 0, 0.5, 0.75 within 1e-12")


def test_echogram_brute_force_equivalence():
    rng = np.random.default_rng(777)
    config = PreprocessConfig(size_thresh=3.0, reference_range=5.0)
    for _ in range(100):
        clip = random_clip(rng, max_frames=8, max_rows=16, max_beams=16)
        raw = build_echogram(clip, config, orient_upstream=False)
        exp_intensity, exp_lateral = echogram_naive(clip.frames, config, clip.header)
        assert np.array_equal(raw.intensity, exp_intensity)
        assert np.array_equal(raw.lateral, exp_lateral)
        oriented = build_echogram(clip, config)
        exp_intensity, exp_lateral = echogram_naive(
            clip.frames, config, clip.header, orient_upstream=True
        )
        assert np.array_equal(oriented.intensity, exp_intensity)
        assert np.array_equal(oriented.lateral, exp_lateral)
    report("echogram equals brute-force max/argmax on 100 random clips, bit-exact")


def test_preprocess_monotonicity_and_component_oracle():
    rng = np.random.default_rng(2024)
    # nonzero pixel count non-increasing in each threshold
    for seed in range(4):
        clip_rng = np.random.default_rng(seed)
        header = make_header(
            frame_count=6, range_samples=18, beam_count=18, window_start=0.0,
            window_end=18.0,
        )
        frames = np.clip(clip_rng.normal(14.0, 4.0, (6, 18, 18)), 0, 255)
        for t in range(6):
            frames[t, 5:9, 2 * t : 2 * t + 3] += 185
        clip = Clip(header, np.rint(frames).astype(np.uint8))

        def nonzero(a0, a1, a2):
            config = PreprocessConfig(
                alpha0=a0, alpha1=a1, alpha2=a2, size_thresh=3.0,
                reference_range=9.0, sweep=True,
            )
            return int(np.count_nonzero(clean_clip(clip, config).frames))

        for a0 in (0, 5, 15):
            series = [nonzero(a0, a1, 60) for a1 in (0, 20, 40, 55)]
            assert all(b <= a for a, b in zip(series, series[1:]))
            series = [nonzero(a0, 20, a2) for a2 in (25, 60, 120, 250)]
            assert all(b <= a for a, b in zip(series, series[1:]))
        series = [nonzero(a0, 40, 60) for a0 in (0, 5, 10, 20, 39)]
        assert all(b <= a for a, b in zip(series, series[1:]))

    # component keep/drop decisions match the flood-fill oracle exactly
    header = make_header(
        range_samples=16, beam_count=16, window_start=1.0, window_end=17.0
    )
    config = PreprocessConfig(size_thresh=6.0, reference_range=5.0)
    for _ in range(200):
        frame = (rng.random((16, 16)) < 0.35).astype(np.uint8) * 200
        mask = connected_components(frame, config, header)
        kept_oracle, dropped_oracle = keep_decisions(frame, config, header)
        kept_impl = {
            frozenset(zip(*np.nonzero(mask.labels == lbl))) for lbl in mask.kept_ids
        }
        dropped_impl = {
            frozenset(zip(*np.nonzero(mask.labels == lbl)))
            for lbl in set(np.unique(mask.labels)) - {0} - set(mask.kept_ids)
        }
        assert kept_impl == set(kept_oracle)
        assert dropped_impl == set(dropped_oracle)
    report(
        "preprocess: alpha-monotone pixel counts; 200/200 flood-fill "
        "keep/drop agreements, exact"
    )


def random_labeled_slice(rng, height=8, width=8):
    intensity = rng.integers(0, 256, (height, width), dtype=np.uint8)
    lateral = rng.integers(0, 257, (height, width)).astype(np.float64) / 256.0
    lateral[intensity == 0] = 0.0
    label = CountLabel(
        "s", 0, int(rng.integers(0, 5)), int(rng.integers(0, 5)), "weak"
    )
    return LabeledSlice(EchogramSlice("s", 0, intensity, lateral), label)


def test_augmentation_algebra():
    rng = np.random.default_rng(31)
    for _ in range(1000):
        x = random_labeled_slice(rng)
        for op in (vflip, hflip_naive):
            twice = op(op(x))
            assert np.array_equal(twice.slice.intensity, x.slice.intensity)
            assert np.array_equal(twice.slice.lateral, x.slice.lateral)
            assert (twice.label.left, twice.label.right) == (
                x.label.left,
                x.label.right,
            )
        twice = hflip_realistic(hflip_realistic(x))
        support = x.slice.intensity > 0
        assert np.array_equal(twice.slice.intensity, x.slice.intensity)
        assert np.array_equal(twice.slice.lateral[support], x.slice.lateral[support])

    zero = LabeledSlice(
        EchogramSlice("s", 0, np.zeros((8, 8), np.uint8), np.zeros((8, 8))),
        CountLabel("s", 0, 0, 0, "weak"),
    )
    for _ in range(200):
        a = random_labeled_slice(rng)
        b = random_labeled_slice(rng)
        ident = superpose(a, zero)
        assert np.array_equal(ident.slice.intensity, a.slice.intensity)
        assert np.array_equal(ident.slice.lateral, a.slice.lateral)
        assert (ident.label.left, ident.label.right) == (a.label.left, a.label.right)
        merged = superpose(a, b)
        assert merged.label.left == a.label.left + b.label.left
        assert merged.label.right == a.label.right + b.label.right
        assert np.array_equal(
            merged.slice.intensity,
            np.maximum(a.slice.intensity, b.slice.intensity),
        )
    report(
        "augmentation algebra: 1000 exact involutions per flip, superpose "
        "identity/additivity/max exact"
    )


# 20 constructed tracks: points, expected direction (+1 right / -1 left / 0
# uncounted), hand-computed crossing frame, expected window at width 100.
CROSSING_CASES = [
    ([(0, 0.0), (100, 1.0)], +1, 50.0, 0),
    ([(0, 1.0), (100, 0.0)], -1, 50.0, 0),
    ([(0, 0.25), (50, 0.75)], +1, 25.0, 0),
    ([(90, 0.375), (110, 0.625)], +1, 100.0, 1),
    ([(200, 0.9), (220, 0.1)], -1, 210.0, 2),
    ([(0, 0.125), (10, 0.375), (20, 0.625)], +1, 15.0, 0),
    ([(0, 0.4), (10, 0.45), (30, 0.55), (40, 0.7)], +1, 20.0, 0),
    ([(150, 0.6), (170, 0.4), (190, 0.6)], 0, None, None),
    ([(0, 0.4), (99, 0.5), (150, 0.8)], +1, 99.0, 0),
    ([(0, 0.375), (100, 0.5), (150, 0.875)], +1, 100.0, 1),
    ([(0, 0.6), (399, 0.5), (500, 0.2)], -1, 399.0, 3),
    ([(500, 0.2), (600, 0.45), (700, 0.55), (800, 0.9)], +1, 650.0, 6),
    ([(10, 0.75), (20, 0.25), (30, 0.75), (40, 0.25)], -1, 15.0, 0),
    ([(0, 0.25), (10, 0.75), (20, 0.25), (30, 0.75)], +1, 5.0, 0),
    ([(95, 0.0), (105, 0.25), (115, 0.75)], +1, 110.0, 1),
    ([(880, 0.9), (920, 0.7), (990, 0.3)], -1, 955.0, 9),
    ([(0, 0.46875), (999, 0.53125)], +1, 499.5, 4),
    ([(60, 0.5625), (70, 0.4375)], -1, 65.0, 0),
    ([(130, 0.3), (140, 0.5), (150, 0.3)], 0, None, None),
    ([(370, 0.2), (380, 0.6), (390, 0.2), (400, 0.8)], +1, 377.5, 3),
]


def test_count_rule_crossing_windows_and_mirror_invariance():
    assert len(CROSSING_CASES) == 20
    for pts, direction, crossing, window in CROSSING_CASES:
        track = Track("t", tuple(TrackPoint(f, x, 0.5) for f, x in pts))
        ts = TrackSet("c", Side.RIGHT, (track,))
        labels = tracks_to_counts(ts, window=100, total_frames=1000)
        totals = [(l.left, l.right) for l in labels]
        if direction == 0:
            assert all(t == (0, 0) for t in totals)
            continue
        expected = [(0, 0)] * 10
        expected[window] = (0, 1) if direction > 0 else (1, 0)
        assert totals == expected
        got = _first_crossing_frame(track.points)
        assert got == pytest.approx(crossing, abs=1e-9)

    # mirrored world: orient() of the mirrored tracks restores the counts
    rng = np.random.default_rng(99)
    for _ in range(50):
        tracks = []
        for i in range(int(rng.integers(1, 9))):
            k = int(rng.integers(2, 6))
            frames = sorted(rng.choice(900, size=k, replace=False).tolist())
            xs = [float(q) / 256.0 for q in rng.integers(0, 257, k)]
            tracks.append(
                Track(f"t{i}", tuple(TrackPoint(f, x, 0.5) for f, x in zip(frames, xs)))
            )
        ts = TrackSet("c", Side.RIGHT, tuple(tracks))
        base = tracks_to_counts(ts, window=100, total_frames=900)
        mirrored_tracks = tuple(
            Track(t.id, tuple(TrackPoint(p.frame, 1.0 - p.x, p.y) for p in t.points))
            for t in ts.tracks
        )
        mirrored = TrackSet("c", Side.LEFT, mirrored_tracks)
        restored = tracks_to_counts(orient(mirrored), window=100, total_frames=900)
        assert [(l.left, l.right) for l in restored] == [
            (l.left, l.right) for l in base
        ]
        swapped = tracks_to_counts(
            TrackSet("c", Side.RIGHT, mirrored_tracks), window=100, total_frames=900
        )
        assert [(l.left, l.right) for l in swapped] == [
            (l.right, l.left) for l in base
        ]
    report(
        "count rule: 20 hand-computed crossing windows exact; "
        "mirror round-trip maps left<->right exactly"
    )


def test_format_round_trips():
    rng = np.random.default_rng(55)
    for _ in range(100):
        clip = random_clip(rng)
        data = clip_to_bytes(clip)
        again = clip_from_bytes(data)
        assert again == clip
        assert clip_to_bytes(again) == data
    for _ in range(100):
        h = int(rng.integers(1, 20))
        w = int(rng.integers(1, 20))
        intensity = rng.integers(0, 256, (h, w), dtype=np.uint8)
        lateral = rng.integers(0, 256, (h, w)).astype(np.float64) / 255.0
        lateral[intensity == 0] = 0.0
        padded = bool(rng.random() < 0.5)
        s = EchogramSlice(
            "s", 0, intensity, lateral,
            padded=padded, pad_start=int(rng.integers(0, w)) if padded else 0,
        )
        data = ecg_to_bytes(s)
        again = ecg_from_bytes(data, clip_id="s")
        assert again == s
        assert ecg_to_bytes(again) == data
    report("SVC1 and ECG1 round-trips: 100 + 100 random instances, bytewise")


def noisy_sweep_clip(seed, clip_id):
    rng = np.random.default_rng(seed)
    header = ClipHeader(220, 48, 32, 10.0, 1.0, 9.0, 30.0, Side.RIGHT)
    fish = tuple(
        SynthFish(
            entry_frame=int(rng.integers(0, 120)),
            speed=float(rng.uniform(0.2, 0.5)),
            entry_beam=2.0,
            range_row=float(rng.uniform(8.0, 40.0)),
            peak_intensity=float(rng.uniform(160.0, 220.0)),
        )
        for _ in range(3)
    )
    config = SynthConfig(
        header=header, fish=fish, background_level=12.0, noise_sigma=3.0,
        seed=int(rng.integers(0, 2**32)),
    )
    clip, _, _ = synth_clip(config, clip_id=clip_id)
    return clip


def test_sweep_harness(tmp_path):
    clips_dir = tmp_path / "clips"
    clips_dir.mkdir()
    for i in range(6):
        write_clip(noisy_sweep_clip(1000 + i, f"noisy{i}"), clips_dir / f"noisy{i}.svc")
    out = tmp_path / "sweep.csv"
    assert cli_main(["sweep", "--clips", str(clips_dir), "--out", str(out)]) == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4  # one row per sweep configuration
    for row in rows:
        assert set(row) == {
            "alpha0", "alpha1", "alpha2", "size_thresh", "reference_range",
            "clips", "nonzero_pixels", "total_pixels", "total_nmae",
        }
        assert int(row["clips"]) == 6
        assert 0 <= int(row["nonzero_pixels"]) <= int(row["total_pixels"])
    by_config = {
        (float(r["alpha0"]), float(r["alpha1"]), float(r["alpha2"]),
         float(r["size_thresh"])): int(r["nonzero_pixels"])
        for r in rows
    }
    raw = by_config[(0.0, 0.0, 0.0, 0.0)]
    best = by_config[(20.0, 40.0, 60.0, 100.0)]
    assert raw >= 2 * best, f"raw {raw} vs best {best}"
    report(
        f"sweep harness: 4-row CSV; all-zeros config keeps {raw} nonzero px "
        f">= 2x best config ({best})"
    )
