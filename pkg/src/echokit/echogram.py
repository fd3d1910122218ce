"""Echogram synthesis, window slicing, normalization, and the ECG1 container.

An echogram compresses a cleaned clip into a 2-channel image: one column per
frame, one row per range sample. Channel 0 holds the maximum intensity across
beams at each range; channel 1 holds the lateral position of that maximum
(beam index normalized to [0, 1], ties broken toward the smallest index,
pinned to 0 wherever the intensity is 0).

ECG1 layout, little-endian::

    "ECG1"       4 bytes magic
    width        u32
    height       u32
    flags        u8    bit 0: right-padded
    pad_start    u32   first padded column, 0 if none
    intensity    height * width bytes, row-major
    lateral      height * width bytes, round(v * 255)

The lateral channel is real-valued in memory and quantized to 8 bits only in
the file.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import FormatError, TruncationError, ValidationError
from .preprocess import PreprocessConfig, clean_clip
from .sonar_format import Clip, Side

ECG_MAGIC = b"ECG1"

_ECG_HEADER = struct.Struct("<4sIIBI")

FLAG_RIGHT_PADDED = 0x01

MODEL_HEIGHT = 200
MODEL_WIDTH = 800


def _validate_channels(intensity: np.ndarray, lateral: np.ndarray) -> None:
    if intensity.dtype != np.uint8:
        raise ValidationError(f"intensity must be uint8, got {intensity.dtype}")
    if intensity.ndim != 2:
        raise ValidationError(f"intensity must be 2-D, got shape {intensity.shape}")
    if lateral.shape != intensity.shape:
        raise ValidationError(
            f"lateral shape {lateral.shape} does not match intensity {intensity.shape}"
        )
    if lateral.size and (lateral.min() < 0.0 or lateral.max() > 1.0):
        raise ValidationError("lateral values must lie in [0, 1]")
    if np.any(lateral[intensity == 0] != 0.0):
        raise ValidationError("lateral must be 0 wherever intensity is 0")


@dataclass(frozen=True, eq=False)
class Echogram:
    """Full-clip echogram: height = range samples, width = frame count."""

    clip_id: str
    intensity: np.ndarray
    lateral: np.ndarray
    source_config: PreprocessConfig | None = None

    def __post_init__(self) -> None:
        intensity = np.asarray(self.intensity)
        lateral = np.asarray(self.lateral, dtype=np.float64)
        _validate_channels(intensity, lateral)
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "lateral", lateral)

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Echogram):
            return NotImplemented
        return (
            self.clip_id == other.clip_id
            and np.array_equal(self.intensity, other.intensity)
            and np.array_equal(self.lateral, other.lateral)
        )


@dataclass(frozen=True, eq=False)
class EchogramSlice:
    """A fixed-width window cut from an echogram.

    A final partial window is zero-padded on the right up to the window width;
    ``padded`` marks it and ``pad_start`` is the first padded column in slice
    coordinates (0 when not padded).
    """

    clip_id: str
    x_offset: int
    intensity: np.ndarray
    lateral: np.ndarray
    padded: bool = False
    pad_start: int = 0

    def __post_init__(self) -> None:
        intensity = np.asarray(self.intensity)
        lateral = np.asarray(self.lateral, dtype=np.float64)
        _validate_channels(intensity, lateral)
        if self.x_offset < 0:
            raise ValidationError(f"x_offset must be >= 0, got {self.x_offset}")
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "lateral", lateral)

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def window(self) -> int:
        return self.intensity.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EchogramSlice):
            return NotImplemented
        return (
            self.clip_id == other.clip_id
            and self.x_offset == other.x_offset
            and self.padded == other.padded
            and self.pad_start == other.pad_start
            and np.array_equal(self.intensity, other.intensity)
            and np.array_equal(self.lateral, other.lateral)
        )


def collapse_frame(frame: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse one frame into (intensity column, lateral column).

    intensity[r] = max over beams; lateral[r] = argmax beam / (B - 1) with
    ties broken toward the smallest beam index, 0 where the row is empty.
    """
    frame = np.asarray(frame)
    if frame.ndim != 2 or frame.shape[1] < 2:
        raise ValidationError(
            f"frame must have at least 2 beams, got shape {frame.shape}"
        )
    intensity = frame.max(axis=1)
    lateral = frame.argmax(axis=1) / (frame.shape[1] - 1)
    lateral[intensity == 0] = 0.0
    return intensity, lateral


def build_echogram(
    clip: Clip,
    config: PreprocessConfig,
    clip_id: str = "",
    orient_upstream: bool = True,
) -> Echogram:
    """Clean a clip and collapse it column-by-column into an echogram.

    Frame t becomes column x = t, chronological order. With
    ``orient_upstream`` (the default), clips whose upstream side is left are
    beam-mirrored first so that rising lateral values always read as upstream
    motion; count labels share that convention, and a model cannot recover
    the recording side from pixels alone. Pass ``orient_upstream=False`` for
    raw-coordinate echograms.
    """
    cleaned = clean_clip(clip, config)
    frames = cleaned.frames
    if orient_upstream and clip.header.upstream_side is Side.LEFT:
        frames = frames[:, :, ::-1]
    intensity = frames.max(axis=2).T
    lateral = (frames.argmax(axis=2) / (clip.header.beam_count - 1)).T
    lateral = np.where(intensity == 0, 0.0, lateral)
    return Echogram(
        clip_id=clip_id,
        intensity=np.ascontiguousarray(intensity),
        lateral=np.ascontiguousarray(lateral),
        source_config=config,
    )


def slice_echogram(
    e: Echogram, window: int = 200, stride: int = 200
) -> list[EchogramSlice]:
    """Cut an echogram into fixed-width windows at offsets 0, stride, ...

    Windows are emitted while x_offset + window <= width. If columns on the
    right remain uncovered, a final zero-padded window is appended so clip
    totals stay conserved; a window wider than the echogram yields a single
    padded slice.
    """
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    slices: list[EchogramSlice] = []
    offset = 0
    while offset + window <= e.width:
        slices.append(
            EchogramSlice(
                clip_id=e.clip_id,
                x_offset=offset,
                intensity=e.intensity[:, offset : offset + window].copy(),
                lateral=e.lateral[:, offset : offset + window].copy(),
            )
        )
        offset += stride
    covered = slices[-1].x_offset + window if slices else 0
    if covered < e.width:
        pad_offset = slices[-1].x_offset + stride if slices else 0
        valid = e.width - pad_offset
        intensity = np.zeros((e.height, window), dtype=np.uint8)
        lateral = np.zeros((e.height, window), dtype=np.float64)
        intensity[:, :valid] = e.intensity[:, pad_offset:]
        lateral[:, :valid] = e.lateral[:, pad_offset:]
        slices.append(
            EchogramSlice(
                clip_id=e.clip_id,
                x_offset=pad_offset,
                intensity=intensity,
                lateral=lateral,
                padded=True,
                pad_start=valid,
            )
        )
    return slices


def normalize_slice(
    s: EchogramSlice,
    out_height: int = MODEL_HEIGHT,
    out_width: int = MODEL_WIDTH,
) -> np.ndarray:
    """Map a slice to model-input form.

    Intensity is scaled to [0, 1]; both channels are shifted by -0.5 and
    divided by 0.25 (range [-2, 2]), then resized per channel with bilinear
    interpolation. Returns a float32 array of shape (2, out_height, out_width).
    """
    channels = (s.intensity.astype(np.float64) / 255.0, s.lateral)
    out = []
    for chan in channels:
        mapped = ((chan - 0.5) / 0.25).astype(np.float32)
        out.append(
            cv2.resize(mapped, (out_width, out_height), interpolation=cv2.INTER_LINEAR)
        )
    return np.stack(out)


# ---------------------------------------------------------------------------
# ECG1 container.


def ecg_to_bytes(image: Echogram | EchogramSlice) -> bytes:
    h, w = image.intensity.shape
    flags = FLAG_RIGHT_PADDED if getattr(image, "padded", False) else 0
    pad_start = int(getattr(image, "pad_start", 0)) if flags else 0
    head = _ECG_HEADER.pack(ECG_MAGIC, w, h, flags, pad_start)
    lateral_q = np.rint(image.lateral * 255.0).astype(np.uint8)
    return head + image.intensity.tobytes() + lateral_q.tobytes()


def write_ecg(image: Echogram | EchogramSlice, path: str | Path) -> None:
    """Serialize an echogram or slice to ECG1; deterministic."""
    Path(path).write_bytes(ecg_to_bytes(image))


def ecg_from_bytes(
    data: bytes, clip_id: str = "", x_offset: int = 0
) -> EchogramSlice:
    if data[:4] != ECG_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {ECG_MAGIC!r}")
    if len(data) < _ECG_HEADER.size:
        raise TruncationError(
            f"header needs {_ECG_HEADER.size} bytes, file holds {len(data)}"
        )
    _, w, h, flags, pad_start = _ECG_HEADER.unpack_from(data, 0)
    plane = h * w
    body = data[_ECG_HEADER.size :]
    if len(body) < 2 * plane:
        raise TruncationError(f"expected {2 * plane} plane bytes, found {len(body)}")
    if len(body) > 2 * plane:
        raise FormatError(f"{len(body) - 2 * plane} trailing bytes after planes")
    intensity = np.frombuffer(body[:plane], dtype=np.uint8).reshape(h, w).copy()
    lateral_q = np.frombuffer(body[plane:], dtype=np.uint8).reshape(h, w)
    lateral = lateral_q.astype(np.float64) / 255.0
    lateral[intensity == 0] = 0.0
    padded = bool(flags & FLAG_RIGHT_PADDED)
    return EchogramSlice(
        clip_id=clip_id,
        x_offset=x_offset,
        intensity=intensity,
        lateral=lateral,
        padded=padded,
        pad_start=int(pad_start) if padded else 0,
    )


def read_ecg(path: str | Path, clip_id: str = "", x_offset: int = 0) -> EchogramSlice:
    """Parse an ECG1 file. The container carries no clip id or offset; callers
    pass them from the surrounding naming convention."""
    return ecg_from_bytes(Path(path).read_bytes(), clip_id=clip_id, x_offset=x_offset)


def render_png_array(image: Echogram | EchogramSlice) -> np.ndarray:
    """Debug rendering: lateral mapped to hue, intensity to value. BGR uint8."""
    h, w = image.intensity.shape
    hsv = np.zeros((h, w, 3), dtype=np.uint8)
    hsv[:, :, 0] = np.rint(image.lateral * 170.0).astype(np.uint8)
    hsv[:, :, 1] = np.where(image.intensity > 0, 255, 0).astype(np.uint8)
    hsv[:, :, 2] = image.intensity
    return cv2.cvtColor(hsv, cv2.COLOR_HSV2BGR)
