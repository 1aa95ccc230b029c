import numpy as np
import pytest

from gazesim.types import GazeRecording


def make_recording(timestamps, gaze_x, gaze_y, tgt_x=None, tgt_y=None,
                   rate_hz=1000.0, recording_id="test"):
    n = len(timestamps)
    if tgt_x is None:
        tgt_x = np.zeros(n)
    if tgt_y is None:
        tgt_y = np.zeros(n)
    return GazeRecording(
        timestamps_ms=timestamps, gaze_x=gaze_x, gaze_y=gaze_y,
        tgt_x=tgt_x, tgt_y=tgt_y, nominal_rate_hz=rate_hz,
        recording_id=recording_id,
    )


def piecewise_recording(dwells_ms, targets, latency_ms=0.0, rate_hz=1000.0,
                        noise=0.0, seed=0, tail_ms=1200.0, recording_id="pw"):
    """Piecewise-constant target with gaze = target delayed by latency_ms."""
    rng = np.random.default_rng(seed)
    period = 1000.0 / rate_hz
    total = float(np.sum(dwells_ms)) + latency_ms + tail_ms
    n = int(np.floor(total / period + 1e-9)) + 1
    t = np.arange(n) * period
    bounds = np.concatenate(([0.0], np.cumsum(dwells_ms)))
    pos = np.asarray(targets, dtype=float)
    tgt_idx = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0, len(dwells_ms) - 1)
    gaze_idx = np.clip(np.searchsorted(bounds, t - latency_ms, side="right") - 1,
                       0, len(dwells_ms) - 1)
    gx = pos[gaze_idx, 0] + rng.standard_normal(n) * noise
    gy = pos[gaze_idx, 1] + rng.standard_normal(n) * noise
    return make_recording(t, gx, gy, pos[tgt_idx, 0], pos[tgt_idx, 1],
                          rate_hz=rate_hz, recording_id=recording_id)


@pytest.fixture
def four_sample_recording():
    return make_recording([0.0, 1.0, 2.0, 3.0], [0.1, 0.2, 0.3, 0.4],
                          [0.0, 0.0, 0.1, 0.1])
