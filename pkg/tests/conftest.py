import numpy as np
import pytest

from echokit.sonar_format import Clip, ClipHeader, Side


def make_header(**kw):
    base = dict(
        frame_count=1,
        range_samples=2,
        beam_count=2,
        frame_rate=10.0,
        window_start=0.0,
        window_end=10.0,
        beam_fov=30.0,
        upstream_side=Side.RIGHT,
    )
    base.update(kw)
    return ClipHeader(**base)


def random_clip(rng, max_frames=8, max_rows=16, max_beams=16):
    fc = int(rng.integers(1, max_frames + 1))
    rows = int(rng.integers(1, max_rows + 1))
    beams = int(rng.integers(2, max_beams + 1))
    header = ClipHeader(
        frame_count=fc,
        range_samples=rows,
        beam_count=beams,
        frame_rate=float(rng.uniform(1.0, 30.0)),
        window_start=float(rng.uniform(0.0, 4.0)),
        window_end=float(rng.uniform(6.0, 30.0)),
        beam_fov=float(rng.uniform(10.0, 170.0)),
        upstream_side=Side.LEFT if rng.random() < 0.5 else Side.RIGHT,
    )
    frames = rng.integers(0, 256, (fc, rows, beams), dtype=np.uint8)
    return Clip(header, frames)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
