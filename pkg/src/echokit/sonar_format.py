"""Reader/writer for the SVC1 sonar clip container plus range geometry helpers.

An SVC1 file holds one continuous multi-beam sonar recording: a fixed-size
little-endian header describing the acquisition geometry, followed by
``frame_count`` frames of 8-bit echo intensities on the polar grid
(row = range sample, nearest range first; column = beam, leftmost first).

Layout::

    "SVC1"            4 bytes magic
    frame_count       u32
    range_samples     u32   (R)
    beam_count        u32   (B)
    frame_rate        f32   Hz
    window_start      f32   meters
    window_end        f32   meters
    beam_fov          f32   degrees
    upstream_side     u8    0 = left, 1 = right
    reserved          3 zero bytes
    frames            frame_count * R * B bytes, range-major, beam fastest

The parser is strict: reserved bytes must be zero and trailing bytes are
rejected, so write -> read -> write is byte-stable.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncationError, ValidationError

MAGIC = b"SVC1"

_HEADER = struct.Struct("<4sIIIffffB3x")


class Side(enum.Enum):
    """Image side toward which upstream-moving fish travel."""

    LEFT = 0
    RIGHT = 1

    @classmethod
    def parse(cls, value: "Side | str | int") -> "Side":
        if isinstance(value, Side):
            return value
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                pass
        if isinstance(value, int) and not isinstance(value, bool):
            try:
                return cls(value)
            except ValueError:
                pass
        raise ValidationError(f"upstream_side must be 'left' or 'right', got {value!r}")

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ClipHeader:
    """Acquisition metadata for one clip.

    Float fields are snapped to float32 precision on construction so that a
    header survives the f32 container encoding bit-for-bit.
    """

    frame_count: int
    range_samples: int
    beam_count: int
    frame_rate: float
    window_start: float
    window_end: float
    beam_fov: float
    upstream_side: Side

    def __post_init__(self) -> None:
        for name in ("frame_count", "range_samples", "beam_count"):
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in ("frame_rate", "window_start", "window_end", "beam_fov"):
            object.__setattr__(self, name, float(np.float32(getattr(self, name))))
        object.__setattr__(self, "upstream_side", Side.parse(self.upstream_side))
        if self.frame_count < 1:
            raise ValidationError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.range_samples < 1:
            raise ValidationError(f"range_samples must be >= 1, got {self.range_samples}")
        if self.beam_count < 2:
            raise ValidationError(f"beam_count must be >= 2, got {self.beam_count}")
        if not self.window_start >= 0:
            raise ValidationError(f"window_start must be >= 0, got {self.window_start}")
        if not self.window_end > self.window_start:
            raise ValidationError(
                f"window_end must be > window_start, got [{self.window_start}, {self.window_end}]"
            )
        if not 0 < self.beam_fov < 180:
            raise ValidationError(f"beam_fov must be in (0, 180), got {self.beam_fov}")

    @property
    def frame_shape(self) -> tuple[int, int]:
        return (self.range_samples, self.beam_count)


@dataclass(frozen=True, eq=False)
class Clip:
    """A chronological stack of frames plus its header.

    ``frames`` is a read-only uint8 array of shape
    (frame_count, range_samples, beam_count).
    """

    header: ClipHeader
    frames: np.ndarray

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.dtype != np.uint8:
            raise ValidationError(f"frames must be uint8, got dtype {frames.dtype}")
        expected = (
            self.header.frame_count,
            self.header.range_samples,
            self.header.beam_count,
        )
        if frames.shape != expected:
            raise ValidationError(
                f"frames shape {frames.shape} does not match header {expected}"
            )
        frames = frames.copy()
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Clip):
            return NotImplemented
        return self.header == other.header and np.array_equal(self.frames, other.frames)


def write_clip(clip: Clip, path: str | Path) -> None:
    """Serialize a clip to SVC1. Deterministic: same clip, same bytes."""
    Path(path).write_bytes(clip_to_bytes(clip))


def clip_to_bytes(clip: Clip) -> bytes:
    h = clip.header
    head = _HEADER.pack(
        MAGIC,
        h.frame_count,
        h.range_samples,
        h.beam_count,
        h.frame_rate,
        h.window_start,
        h.window_end,
        h.beam_fov,
        h.upstream_side.value,
    )
    return head + clip.frames.tobytes()


def read_clip(path: str | Path) -> Clip:
    """Parse an SVC1 file; inverse of :func:`write_clip`, bit-for-bit."""
    return clip_from_bytes(Path(path).read_bytes())


def clip_from_bytes(data: bytes) -> Clip:
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise TruncationError(
            f"header needs {_HEADER.size} bytes, file holds {len(data)}"
        )
    _, fc, rs, bc, rate, ws, we, fov, side = _HEADER.unpack_from(data, 0)
    if data[_HEADER.size - 3 : _HEADER.size] != b"\x00\x00\x00":
        raise FormatError("reserved header bytes must be zero")
    if side not in (0, 1):
        raise ValidationError(f"upstream_side byte must be 0 or 1, got {side}")
    header = ClipHeader(fc, rs, bc, rate, ws, we, fov, Side(side))
    payload = fc * rs * bc
    body = data[_HEADER.size :]
    if len(body) < payload:
        raise TruncationError(f"expected {payload} frame bytes, found {len(body)}")
    if len(body) > payload:
        raise FormatError(f"{len(body) - payload} trailing bytes after frame payload")
    frames = np.frombuffer(body, dtype=np.uint8).reshape(fc, rs, bc)
    return Clip(header, frames)


def mean_frame(clip: Clip) -> np.ndarray:
    """Per-pixel arithmetic mean over all frames, accumulated in float64."""
    return clip.frames.mean(axis=0, dtype=np.float64)


def range_of_sample(header: ClipHeader, row: int | float) -> float:
    """Radial distance of a range sample, bin-center convention.

    Accepts fractional rows (e.g. component centroids); the mapping is affine
    so the range of a mean row equals the mean of the per-row ranges.
    """
    if not 0 <= row < header.range_samples:
        raise IndexError(f"row {row} out of range [0, {header.range_samples})")
    step = (header.window_end - header.window_start) / header.range_samples
    return header.window_start + (row + 0.5) * step
