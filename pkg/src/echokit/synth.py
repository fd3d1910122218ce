"""Deterministic synthetic sonar clips with known trajectories and counts.

Fish are rendered as anisotropic Gaussian blobs drifting linearly across the
polar grid over a constant background with optional Gaussian pixel noise.
Ground-truth tracks hold the true per-frame blob centers while in view, and
the per-window count labels are derived from those trajectories (never from
rendered pixels), so generated scenes can serve as an end-to-end oracle for
the pixel pipeline.

Scenario files are plain ``key = value`` text with one repeatable ``fish``
key; see ``parse_synth_config``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .counts import CountLabel, Track, TrackPoint, TrackSet, orient, tracks_to_counts
from .errors import ValidationError
from .sonar_format import Clip, ClipHeader, Side


@dataclass(frozen=True)
class SynthFish:
    """One fish: linear motion from its entry frame until it leaves the grid.

    ``speed`` is in beams/frame, positive rightward; ``range_drift`` is in
    rows/frame.
    """

    entry_frame: int
    speed: float
    entry_beam: float
    range_row: float
    range_drift: float = 0.0
    peak_intensity: float = 200.0
    blob_sigma_rows: float = 1.5
    blob_sigma_beams: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.peak_intensity <= 255:
            raise ValidationError(
                f"peak_intensity must be in (0, 255], got {self.peak_intensity}"
            )
        if self.blob_sigma_rows <= 0 or self.blob_sigma_beams <= 0:
            raise ValidationError("blob sigmas must be > 0")

    def position(self, frame: int) -> tuple[float, float]:
        """(row, beam) center at the given frame."""
        dt = frame - self.entry_frame
        return (
            self.range_row + self.range_drift * dt,
            self.entry_beam + self.speed * dt,
        )


@dataclass(frozen=True)
class SynthConfig:
    header: ClipHeader
    fish: tuple[SynthFish, ...] = ()
    background_level: float = 10.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "fish", tuple(self.fish))
        if not 0 <= self.background_level <= 255:
            raise ValidationError(
                f"background_level must be in [0, 255], got {self.background_level}"
            )
        if self.noise_sigma < 0:
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        if self.fish:
            floor = min(f.peak_intensity for f in self.fish)
            if self.background_level + 3.0 * self.noise_sigma >= floor:
                raise ValidationError(
                    "fish must be separable: background_level + 3*noise_sigma "
                    f"({self.background_level + 3.0 * self.noise_sigma}) must be "
                    f"below the dimmest fish peak ({floor})"
                )


def _render(config: SynthConfig) -> np.ndarray:
    header = config.header
    shape = (header.frame_count, header.range_samples, header.beam_count)
    rng = np.random.default_rng(config.seed)
    acc = np.full(shape, float(config.background_level), dtype=np.float64)
    if config.noise_sigma > 0:
        acc += rng.normal(0.0, config.noise_sigma, shape)
    rows = np.arange(header.range_samples, dtype=np.float64)
    beams = np.arange(header.beam_count, dtype=np.float64)
    for fish in config.fish:
        reach_r = 4.0 * fish.blob_sigma_rows
        reach_b = 4.0 * fish.blob_sigma_beams
        for t in range(max(fish.entry_frame, 0), header.frame_count):
            row, beam = fish.position(t)
            r_lo = max(int(math.floor(row - reach_r)), 0)
            r_hi = min(int(math.ceil(row + reach_r)) + 1, header.range_samples)
            b_lo = max(int(math.floor(beam - reach_b)), 0)
            b_hi = min(int(math.ceil(beam + reach_b)) + 1, header.beam_count)
            if r_lo >= r_hi or b_lo >= b_hi:
                continue
            er = np.exp(
                -((rows[r_lo:r_hi] - row) ** 2) / (2.0 * fish.blob_sigma_rows**2)
            )
            eb = np.exp(
                -((beams[b_lo:b_hi] - beam) ** 2) / (2.0 * fish.blob_sigma_beams**2)
            )
            acc[t, r_lo:r_hi, b_lo:b_hi] += fish.peak_intensity * np.outer(er, eb)
    return np.rint(np.clip(acc, 0.0, 255.0)).astype(np.uint8)


def _true_tracks(config: SynthConfig, clip_id: str) -> TrackSet:
    header = config.header
    r_max = header.range_samples - 1
    b_max = header.beam_count - 1
    tracks = []
    warnings = []
    for i, fish in enumerate(config.fish):
        points = []
        for t in range(max(fish.entry_frame, 0), header.frame_count):
            row, beam = fish.position(t)
            if 0.0 <= row <= r_max and 0.0 <= beam <= b_max:
                points.append(TrackPoint(t, beam / b_max, row / r_max))
            elif points:
                break  # linear motion: once out of view, out for good
        if points:
            tracks.append(Track(f"fish{i}", tuple(points)))
        else:
            warnings.append(f"fish{i} never entered the field of view")
    return TrackSet(
        clip_id=clip_id,
        upstream_side=header.upstream_side,
        tracks=tuple(tracks),
        warnings=tuple(warnings),
    )


def synth_clip(
    config: SynthConfig, window: int = 200, clip_id: str = "synth"
) -> tuple[Clip, TrackSet, list[CountLabel]]:
    """Render one scenario.

    Returns the clip, the ground-truth track set (raw image orientation), and
    per-window count labels derived from the oriented trajectories. Bitwise
    deterministic for a fixed config.
    """
    clip = Clip(config.header, _render(config))
    tracks = _true_tracks(config, clip_id)
    labels = tracks_to_counts(
        orient(tracks), window, config.header.frame_count, source="synthetic"
    )
    return clip, tracks, labels


# ---------------------------------------------------------------------------
# Randomized scenario suites.


def _crossing_fish(
    rng: np.random.Generator, header: ClipHeader, w: int, window: int
) -> SynthFish:
    """A fish guaranteed to cross the center beam inside window w."""
    beam_span = header.beam_count - 1
    rightward = 1.0 if rng.random() < 0.7 else -1.0
    travel_frames = int(rng.integers(10, 26))
    frac = float(rng.uniform(0.15, 0.42))
    lo = max(w * window + 2, travel_frames + 1)
    hi = w * window + window - 40
    cross_frame = int(rng.integers(lo, hi))
    center = 0.5 * beam_span
    row = float(rng.uniform(4.0, header.range_samples - 5.0))
    margin = min(row - 2.0, header.range_samples - 3.0 - row)
    drift_cap = min(0.05, margin / (travel_frames + 80.0))
    return SynthFish(
        entry_frame=cross_frame - travel_frames,
        speed=rightward * frac * beam_span / travel_frames,
        entry_beam=center - rightward * frac * beam_span,
        range_row=row,
        range_drift=float(rng.uniform(-drift_cap, drift_cap)),
        peak_intensity=float(rng.uniform(140.0, 240.0)),
        blob_sigma_rows=float(rng.uniform(1.0, 2.5)),
        blob_sigma_beams=float(rng.uniform(0.8, 1.8)),
    )


def _distractor_fish(
    rng: np.random.Generator, header: ClipHeader
) -> SynthFish:
    """A fish that drifts outward near one edge and never crosses center."""
    beam_span = header.beam_count - 1
    on_left = rng.random() < 0.5
    entry_beam = float(rng.uniform(0.03, 0.18) * beam_span)
    speed = -float(rng.uniform(0.1, 0.4))
    if not on_left:
        entry_beam = beam_span - entry_beam
        speed = -speed
    return SynthFish(
        entry_frame=int(rng.integers(0, max(header.frame_count - 20, 1))),
        speed=speed,
        entry_beam=entry_beam,
        range_row=float(rng.uniform(4.0, header.range_samples - 5.0)),
        range_drift=0.0,
        peak_intensity=float(rng.uniform(140.0, 240.0)),
        blob_sigma_rows=float(rng.uniform(1.0, 2.5)),
        blob_sigma_beams=float(rng.uniform(0.8, 1.8)),
    )


def _random_scenario(rng: np.random.Generator, window: int) -> SynthConfig:
    if window < 80:
        raise ValidationError(f"suite scenarios need window >= 80, got {window}")
    r_samples = int(rng.integers(48, 81))
    beams = int(rng.integers(24, 49))
    n_windows = int(rng.integers(1, 3))
    tail = 60 if rng.random() < 0.3 else 0
    frame_count = n_windows * window + tail
    window_start = float(rng.uniform(0.5, 3.0))
    header = ClipHeader(
        frame_count=frame_count,
        range_samples=r_samples,
        beam_count=beams,
        frame_rate=10.0,
        window_start=window_start,
        window_end=window_start + float(rng.uniform(5.0, 14.0)),
        beam_fov=float(rng.uniform(25.0, 35.0)),
        upstream_side=Side.LEFT if rng.random() < 0.5 else Side.RIGHT,
    )
    fish: list[SynthFish] = []
    for w in range(n_windows):
        for _ in range(int(rng.integers(0, 9))):
            fish.append(_crossing_fish(rng, header, w, window))
    for _ in range(int(rng.integers(0, 3))):
        fish.append(_distractor_fish(rng, header))
    if rng.random() < 0.15:
        # out-of-view fish: exercises the empty-track warning path
        fish.append(
            SynthFish(
                entry_frame=0,
                speed=0.1,
                entry_beam=0.5 * (beams - 1),
                range_row=r_samples + 50.0,
                peak_intensity=200.0,
            )
        )
    return SynthConfig(
        header=header,
        fish=tuple(fish),
        background_level=float(rng.integers(6, 16)),
        noise_sigma=0.0 if rng.random() < 0.35 else float(rng.uniform(0.8, 4.0)),
        seed=int(rng.integers(0, 2**32)),
    )


def synth_suite(
    n_clips: int, seed: int, window: int = 200
) -> list[tuple[Clip, TrackSet, list[CountLabel]]]:
    """Generate ``n_clips`` varied scenarios, deterministic per seed.

    Scenarios vary grid size, clip length, orientation, noise level, and fish
    speed/range, with 0-8 center-crossing fish per window in both directions.
    """
    if n_clips < 1:
        raise ValidationError(f"n_clips must be >= 1, got {n_clips}")
    suite = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n_clips)):
        config = _random_scenario(np.random.default_rng(child), window)
        suite.append(synth_clip(config, window=window, clip_id=f"synth{i:04d}"))
    return suite


# ---------------------------------------------------------------------------
# Scenario files: plain key = value text, one repeatable `fish` key.

_FISH_KEYS = {
    "entry_frame": int,
    "speed": float,
    "entry_beam": float,
    "range_row": float,
    "range_drift": float,
    "peak": float,
    "sigma_rows": float,
    "sigma_beams": float,
}


def parse_synth_config(path: str | Path) -> SynthConfig:
    """Parse a scenario file.

    Recognized keys: frame_count, range_samples, beam_count, frame_rate,
    window_start, window_end, beam_fov, upstream_side, background_level,
    noise_sigma, seed, and repeatable ``fish`` lines holding space-separated
    ``key=value`` pairs (entry_frame, speed, entry_beam, range_row,
    range_drift, peak, sigma_rows, sigma_beams). ``#`` starts a comment.
    """
    scalars: dict[str, str] = {}
    fish: list[SynthFish] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "fish":
            fish.append(_parse_fish(value, lineno))
        else:
            scalars[key] = value
    return _config_from_scalars(scalars, fish)


def _parse_fish(spec: str, lineno: int) -> SynthFish:
    kwargs: dict[str, float | int] = {}
    for token in spec.split():
        if "=" not in token:
            raise ValidationError(f"line {lineno}: bad fish token {token!r}")
        key, value = token.split("=", 1)
        if key not in _FISH_KEYS:
            raise ValidationError(f"line {lineno}: unknown fish key {key!r}")
        kwargs[key] = _FISH_KEYS[key](value)
    for required in ("entry_frame", "speed", "entry_beam", "range_row"):
        if required not in kwargs:
            raise ValidationError(f"line {lineno}: fish needs {required}")
    return SynthFish(
        entry_frame=int(kwargs["entry_frame"]),
        speed=float(kwargs["speed"]),
        entry_beam=float(kwargs["entry_beam"]),
        range_row=float(kwargs["range_row"]),
        range_drift=float(kwargs.get("range_drift", 0.0)),
        peak_intensity=float(kwargs.get("peak", 200.0)),
        blob_sigma_rows=float(kwargs.get("sigma_rows", 1.5)),
        blob_sigma_beams=float(kwargs.get("sigma_beams", 1.0)),
    )


_HEADER_KEYS = {
    "frame_count": int,
    "range_samples": int,
    "beam_count": int,
    "frame_rate": float,
    "window_start": float,
    "window_end": float,
    "beam_fov": float,
}

_SCALAR_KEYS = {
    "background_level": float,
    "noise_sigma": float,
    "seed": int,
}


def _config_from_scalars(
    scalars: dict[str, str], fish: list[SynthFish]
) -> SynthConfig:
    known = set(_HEADER_KEYS) | set(_SCALAR_KEYS) | {"upstream_side"}
    unknown = sorted(set(scalars) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    missing = sorted(set(_HEADER_KEYS) - set(scalars))
    if missing:
        raise ValidationError(f"missing config keys: {missing}")
    header = ClipHeader(
        upstream_side=Side.parse(scalars.get("upstream_side", "right")),
        **{k: conv(scalars[k]) for k, conv in _HEADER_KEYS.items()},
    )
    extras = {
        k: conv(scalars[k]) for k, conv in _SCALAR_KEYS.items() if k in scalars
    }
    return SynthConfig(header=header, fish=tuple(fish), **extras)


def format_synth_config(config: SynthConfig) -> str:
    h = config.header
    lines = [
        f"frame_count = {h.frame_count}",
        f"range_samples = {h.range_samples}",
        f"beam_count = {h.beam_count}",
        f"frame_rate = {h.frame_rate}",
        f"window_start = {h.window_start}",
        f"window_end = {h.window_end}",
        f"beam_fov = {h.beam_fov}",
        f"upstream_side = {h.upstream_side}",
        f"background_level = {config.background_level}",
        f"noise_sigma = {config.noise_sigma}",
        f"seed = {config.seed}",
    ]
    for f in config.fish:
        lines.append(
            "fish = "
            f"entry_frame={f.entry_frame} speed={f.speed} entry_beam={f.entry_beam} "
            f"range_row={f.range_row} range_drift={f.range_drift} "
            f"peak={f.peak_intensity} sigma_rows={f.blob_sigma_rows} "
            f"sigma_beams={f.blob_sigma_beams}"
        )
    return "\n".join(lines) + "\n"
