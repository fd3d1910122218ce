"""Echogram-domain augmentations with exact label semantics.

All four operate on raw-scale slices (intensity 0..255, lateral in [0, 1]),
before model-input normalization; inverting the lateral channel would not
survive the affine normalization.

  vflip            mirror the range axis; travel direction, and so the label,
                   is unchanged.
  hflip_naive      mirror the time axis; apparent travel direction reverses,
                   so the (left, right) label swaps.
  hflip_realistic  mirror the time axis, then invert the lateral channel on
                   the nonzero-intensity support so motion reads in the
                   original direction; label unchanged.
  superpose        per pixel, take the (intensity, lateral) pair of the
                   brighter input (ties favor the first); labels add.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .counts import CountLabel
from .echogram import EchogramSlice
from .errors import ValidationError


@dataclass(frozen=True)
class LabeledSlice:
    slice: EchogramSlice
    label: CountLabel


def _with_channels(
    s: EchogramSlice, intensity: np.ndarray, lateral: np.ndarray
) -> EchogramSlice:
    return replace(
        s,
        intensity=np.ascontiguousarray(intensity),
        lateral=np.ascontiguousarray(lateral),
    )


def vflip(x: LabeledSlice) -> LabeledSlice:
    """Mirror the range axis (rows). Label unchanged."""
    s = x.slice
    return LabeledSlice(
        slice=_with_channels(s, s.intensity[::-1], s.lateral[::-1]),
        label=x.label,
    )


def hflip_naive(x: LabeledSlice) -> LabeledSlice:
    """Mirror the time axis (columns); lateral values untouched.

    The apparent crossing direction reverses, so the label swaps:
    (left, right) -> (right, left).
    """
    s = x.slice
    return LabeledSlice(
        slice=_with_channels(s, s.intensity[:, ::-1], s.lateral[:, ::-1]),
        label=replace(x.label, left=x.label.right, right=x.label.left),
    )


def hflip_realistic(x: LabeledSlice) -> LabeledSlice:
    """Mirror the time axis, then invert lateral (v -> 1 - v) on the
    nonzero-intensity support so fish read as moving in the original
    direction. Label unchanged."""
    s = x.slice
    intensity = s.intensity[:, ::-1]
    lateral = s.lateral[:, ::-1]
    lateral = np.where(intensity > 0, 1.0 - lateral, 0.0)
    return LabeledSlice(slice=_with_channels(s, intensity, lateral), label=x.label)


def superpose(a: LabeledSlice, b: LabeledSlice) -> LabeledSlice:
    """Overlay two slices, keeping the brighter pixel's channel pair.

    Ties keep the first operand's pair. Target counts add.
    """
    sa, sb = a.slice, b.slice
    if sa.intensity.shape != sb.intensity.shape:
        raise ValidationError(
            f"slice shapes differ: {sa.intensity.shape} vs {sb.intensity.shape}"
        )
    take_b = sb.intensity > sa.intensity
    intensity = np.where(take_b, sb.intensity, sa.intensity)
    lateral = np.where(take_b, sb.lateral, sa.lateral)
    label = replace(
        a.label,
        left=a.label.left + b.label.left,
        right=a.label.right + b.label.right,
    )
    return LabeledSlice(slice=_with_channels(sa, intensity, lateral), label=label)
