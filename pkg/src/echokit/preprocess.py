"""Two-stage background subtraction with size-gated connected components.

Stage one subtracts the clip's temporal mean frame and keeps pixels whose
residual exceeds a low threshold alpha0. Connected components (8-connected)
of the surviving pixels are sized against an area threshold that scales
inversely with the component's mean range, since a target of fixed physical
size spans fewer pixels at greater range on a polar grid. Stage two then
re-gates every pixel against the raw residual: a moderate threshold alpha1
inside the kept components, an aggressive threshold alpha2 outside them.

Surviving pixels carry the rounded residual (original minus mean), so the
three thresholds act on a single scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .errors import ValidationError
from .sonar_format import Clip, ClipHeader, mean_frame, range_of_sample


@dataclass(frozen=True)
class PreprocessConfig:
    """Thresholds for the two-stage cleaning pass.

    ``alpha0 < alpha1 < alpha2`` is required unless ``sweep`` is set, which
    admits degenerate settings used only for parameter sweeps. ``size_thresh``
    is the component area threshold at ``reference_range`` meters; it is
    scaled by ``reference_range / mean_range`` before the comparison.
    """

    alpha0: float = 20.0
    alpha1: float = 40.0
    alpha2: float = 60.0
    size_thresh: float = 100.0
    reference_range: float = 5.0
    sweep: bool = False

    def __post_init__(self) -> None:
        for name in ("alpha0", "alpha1", "alpha2"):
            value = getattr(self, name)
            if not 0 <= value <= 255:
                raise ValidationError(f"{name} must be in [0, 255], got {value}")
        if not self.sweep and not (self.alpha0 < self.alpha1 < self.alpha2):
            raise ValidationError(
                "thresholds must satisfy alpha0 < alpha1 < alpha2 "
                f"(got {self.alpha0}, {self.alpha1}, {self.alpha2}); "
                "pass sweep=True for degenerate sweep settings"
            )
        if self.size_thresh < 0:
            raise ValidationError(f"size_thresh must be >= 0, got {self.size_thresh}")
        if self.reference_range <= 0:
            raise ValidationError(
                f"reference_range must be > 0, got {self.reference_range}"
            )


@dataclass(frozen=True)
class ComponentMask:
    """8-connected component labels (0 = background) and the ids that passed
    the range-scaled size test."""

    labels: np.ndarray
    kept_ids: frozenset[int] = field(default_factory=frozenset)

    def kept_mask(self) -> np.ndarray:
        """Boolean grid marking pixels inside any kept component."""
        if not self.kept_ids:
            return np.zeros(self.labels.shape, dtype=bool)
        lut = np.zeros(int(self.labels.max()) + 1, dtype=bool)
        lut[list(self.kept_ids)] = True
        return lut[self.labels]


def subtract_background(
    frame: np.ndarray, mean: np.ndarray, alpha: float
) -> np.ndarray:
    """Keep pixels whose residual over the mean frame strictly exceeds alpha.

    Returns a uint8 frame of rounded residuals, zero elsewhere.
    """
    frame = np.asarray(frame)
    mean = np.asarray(mean)
    if frame.shape != mean.shape:
        raise ValidationError(
            f"frame shape {frame.shape} does not match mean shape {mean.shape}"
        )
    residual = frame.astype(np.float64) - mean
    kept = np.rint(np.clip(residual, 0.0, 255.0)).astype(np.uint8)
    return np.where(residual > alpha, kept, np.uint8(0))


def connected_components(
    frame: np.ndarray, config: PreprocessConfig, header: ClipHeader
) -> ComponentMask:
    """Label 8-connected components of the nonzero pixels and apply the
    range-scaled size test.

    A component with pixel count A and mean range r is kept iff
    A > size_thresh * (reference_range / r), strictly.
    """
    foreground = (np.asarray(frame) > 0).astype(np.uint8)
    n, labels, stats, centroids = cv2.connectedComponentsWithStats(
        foreground, connectivity=8
    )
    kept: set[int] = set()
    for lbl in range(1, n):
        area = float(stats[lbl, cv2.CC_STAT_AREA])
        mean_row = float(centroids[lbl, 1])
        r_bar = range_of_sample(header, mean_row)
        if area > config.size_thresh * (config.reference_range / r_bar):
            kept.add(lbl)
    return ComponentMask(labels=labels.astype(np.int32), kept_ids=frozenset(kept))


def clean_clip(clip: Clip, config: PreprocessConfig) -> Clip:
    """Run both cleaning stages over every frame of a clip.

    Pure function of (clip, config); the output clip shares the input header.
    """
    mean = mean_frame(clip)
    out = np.zeros_like(clip.frames)
    for t in range(clip.header.frame_count):
        frame = clip.frames[t]
        residual = frame.astype(np.float64) - mean
        f0 = subtract_background(frame, mean, config.alpha0)
        mask = connected_components(f0, config, clip.header)
        inside = mask.kept_mask()
        keep = np.where(inside, residual > config.alpha1, residual > config.alpha2)
        out[t] = np.where(keep, f0, np.uint8(0))
    return Clip(clip.header, out)
