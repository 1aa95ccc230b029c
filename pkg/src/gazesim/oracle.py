"""Deterministic generator of random-saccade-task recordings.

Recordings come with full ground truth (every drawn parameter), so quality
metrics computed on them can be checked against closed-form expectations
without any real corpus. The gaze model is the stimulus delayed by a
constant saccade latency, plus a constant per-fixation bias and per-sample
white noise; timestamps sit on a uniform grid, optionally jittered. The
recording is extended past the last stimulus dwell so the final fixation
window stays inside the recorded span.
"""
from __future__ import annotations

import io as _io
import csv
import math
from dataclasses import dataclass

import numpy as np

from .degrade import jitter_timestamps
from .io import atomic_write_text, format_float
from .seeding import derive_seed
from .types import GazeRecording

GROUND_TRUTH_HEADER = ("recording_id", "rate_hz", "n_targets", "latency_ms",
                       "bias_sigma_dva", "bias_fixed_x_dva", "bias_fixed_y_dva",
                       "noise_sigma_dva", "isi_jitter_ms", "seed")

# recorded after the last dwell so the final fixation window fits
_TAIL_AFTER_LATENCY_MS = 1000.0


@dataclass(frozen=True)
class OracleSpec:
    """Parameters for one synthetic recording. `dwell_ms` is either a fixed
    duration or a (min, max) range drawn uniformly per target."""

    n_targets: int
    dwell_ms: float | tuple = 1000.0
    target_extent_dva: tuple = (15.0, 10.0)
    rate_hz: float = 1000.0
    latency_ms: float = 200.0
    bias_sigma_dva: float = 0.0
    bias_fixed_dva: tuple = (0.0, 0.0)
    noise_sigma_dva: float = 0.0
    isi_jitter_ms: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_targets < 1:
            raise ValueError(f"n_targets must be >= 1, got {self.n_targets}")
        if not self.rate_hz > 0:
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        for name in ("latency_ms", "bias_sigma_dva", "noise_sigma_dva", "isi_jitter_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        dwell = self.dwell_ms
        if isinstance(dwell, tuple):
            if len(dwell) != 2 or dwell[0] < 0 or dwell[1] < dwell[0]:
                raise ValueError(f"dwell range must be (min, max) with 0 <= min <= max, got {dwell}")
        elif dwell < 0:
            raise ValueError(f"dwell_ms must be >= 0, got {dwell}")


@dataclass(frozen=True)
class GroundTruth:
    """Everything that was drawn while generating one recording."""

    recording_id: str
    rate_hz: float
    n_targets: int
    latency_ms: float
    bias_sigma_dva: float
    bias_fixed_dva: tuple
    noise_sigma_dva: float
    isi_jitter_ms: float
    seed: int
    target_x_dva: tuple
    target_y_dva: tuple
    dwells_ms: tuple
    bias_x_dva: tuple
    bias_y_dva: tuple


def generate_recording(spec: OracleSpec, recording_id: str = "oracle") -> tuple:
    """Generate one recording plus its ground truth.

    Draw order: target positions (x then y), dwell durations, fixation
    biases (x then y), gaze noise (x then y), timestamp jitter.
    """
    rng = np.random.default_rng(spec.seed)
    ex, ey = spec.target_extent_dva
    pos_x = rng.uniform(-ex, ex, spec.n_targets)
    pos_y = rng.uniform(-ey, ey, spec.n_targets)
    if isinstance(spec.dwell_ms, tuple):
        dwells = rng.uniform(spec.dwell_ms[0], spec.dwell_ms[1], spec.n_targets)
    else:
        dwells = np.full(spec.n_targets, float(spec.dwell_ms))
    bias_x = rng.normal(0.0, spec.bias_sigma_dva, spec.n_targets) + spec.bias_fixed_dva[0]
    bias_y = rng.normal(0.0, spec.bias_sigma_dva, spec.n_targets) + spec.bias_fixed_dva[1]

    period = 1000.0 / spec.rate_hz
    total_ms = float(dwells.sum()) + spec.latency_ms + _TAIL_AFTER_LATENCY_MS
    n = int(math.floor(total_ms / period + 1e-9)) + 1
    t = np.arange(n) * period

    # dwell index per sample; the last dwell extends through the tail
    boundaries = np.concatenate(([0.0], np.cumsum(dwells)))
    tgt_idx = np.clip(np.searchsorted(boundaries, t, side="right") - 1,
                      0, spec.n_targets - 1)
    # gaze follows the target that was shown latency_ms ago
    gaze_idx = np.clip(np.searchsorted(boundaries, t - spec.latency_ms, side="right") - 1,
                       0, spec.n_targets - 1)

    gaze_x = pos_x[gaze_idx] + bias_x[gaze_idx] + rng.standard_normal(n) * spec.noise_sigma_dva
    gaze_y = pos_y[gaze_idx] + bias_y[gaze_idx] + rng.standard_normal(n) * spec.noise_sigma_dva
    stamps = jitter_timestamps(t, spec.isi_jitter_ms, rng)

    rec = GazeRecording(
        timestamps_ms=stamps, gaze_x=gaze_x, gaze_y=gaze_y,
        tgt_x=pos_x[tgt_idx], tgt_y=pos_y[tgt_idx],
        nominal_rate_hz=spec.rate_hz, recording_id=recording_id,
    )
    truth = GroundTruth(
        recording_id=recording_id, rate_hz=spec.rate_hz, n_targets=spec.n_targets,
        latency_ms=spec.latency_ms, bias_sigma_dva=spec.bias_sigma_dva,
        bias_fixed_dva=tuple(spec.bias_fixed_dva),
        noise_sigma_dva=spec.noise_sigma_dva, isi_jitter_ms=spec.isi_jitter_ms,
        seed=spec.seed,
        target_x_dva=tuple(pos_x), target_y_dva=tuple(pos_y),
        dwells_ms=tuple(dwells), bias_x_dva=tuple(bias_x), bias_y_dva=tuple(bias_y),
    )
    return rec, truth


@dataclass(frozen=True)
class ParamDist:
    """Per-recording parameter distribution: fixed value, uniform range, or
    lognormal given (median, sigma of log), optionally clipped above."""

    kind: str
    a: float
    b: float = 0.0
    clip_hi: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "uniform", "lognormal"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            value = self.a
        elif self.kind == "uniform":
            value = rng.uniform(self.a, self.b)
        else:
            value = math.exp(rng.normal(math.log(self.a), self.b))
        if self.clip_hi is not None:
            value = min(value, self.clip_hi)
        return float(value)


def fixed(value: float) -> ParamDist:
    return ParamDist("fixed", value)


def uniform(lo: float, hi: float) -> ParamDist:
    return ParamDist("uniform", lo, hi)


def lognormal(median: float, sigma_log: float, clip_hi: float | None = None) -> ParamDist:
    return ParamDist("lognormal", median, sigma_log, clip_hi)


@dataclass(frozen=True)
class CorpusSpec:
    """Distributions from which per-recording oracle parameters are drawn."""

    rate_hz: float
    n_targets: int
    dwell_ms: float | tuple
    target_extent_dva: tuple
    latency: ParamDist
    bias_sigma: ParamDist
    noise_sigma: ParamDist
    isi_jitter: ParamDist


# Named corpus shapes used by tests and the CLI. The numbers are scaffolding
# chosen to look like a high-grade lab tracker and a noisier headset tracker;
# they are not measurements of any particular device.
PRESETS = {
    "eyelink-like": CorpusSpec(
        rate_hz=1000.0, n_targets=16, dwell_ms=1000.0,
        target_extent_dva=(15.0, 10.0),
        latency=uniform(150.0, 250.0),
        bias_sigma=lognormal(0.08, 0.35, clip_hi=0.5),
        noise_sigma=lognormal(0.03, 0.25, clip_hi=0.12),
        isi_jitter=fixed(0.0),
    ),
    "vr-like": CorpusSpec(
        rate_hz=250.0, n_targets=16, dwell_ms=(1000.0, 1500.0),
        target_extent_dva=(15.0, 10.0),
        latency=uniform(150.0, 250.0),
        bias_sigma=lognormal(0.45, 0.45, clip_hi=2.5),
        noise_sigma=uniform(0.145, 0.275),
        isi_jitter=uniform(0.40, 0.62),
    ),
}


def _dist_from_json(value) -> ParamDist:
    if isinstance(value, (int, float)):
        return fixed(float(value))
    return ParamDist(kind=value["kind"], a=float(value["a"]),
                     b=float(value.get("b", 0.0)),
                     clip_hi=value.get("clip_hi"))


def corpus_spec_from_json(payload: dict) -> CorpusSpec:
    """Build a CorpusSpec from a JSON mapping; distribution fields are either
    plain numbers (fixed) or {"kind", "a", "b", "clip_hi"} objects."""
    dwell = payload["dwell_ms"]
    if isinstance(dwell, (list, tuple)):
        dwell = (float(dwell[0]), float(dwell[1]))
    else:
        dwell = float(dwell)
    return CorpusSpec(
        rate_hz=float(payload["rate_hz"]),
        n_targets=int(payload["n_targets"]),
        dwell_ms=dwell,
        target_extent_dva=tuple(float(v) for v in payload.get("target_extent_dva",
                                                              (15.0, 10.0))),
        latency=_dist_from_json(payload.get("latency", 200.0)),
        bias_sigma=_dist_from_json(payload.get("bias_sigma", 0.0)),
        noise_sigma=_dist_from_json(payload.get("noise_sigma", 0.0)),
        isi_jitter=_dist_from_json(payload.get("isi_jitter", 0.0)),
    )


def generate_corpus(spec: CorpusSpec, n_recordings: int, seed: int,
                    id_prefix: str = "oracle") -> list:
    """Generate a corpus of (recording, ground truth) pairs, reproducible
    from the seed alone; per-recording seeds are derived, so order does not
    matter."""
    if n_recordings < 1:
        raise ValueError(f"n_recordings must be >= 1, got {n_recordings}")
    corpus = []
    for i in range(n_recordings):
        rid = f"{id_prefix}_{i:04d}"
        params_rng = np.random.default_rng(derive_seed(seed, rid, "params"))
        rec_spec = OracleSpec(
            n_targets=spec.n_targets,
            dwell_ms=spec.dwell_ms,
            target_extent_dva=spec.target_extent_dva,
            rate_hz=spec.rate_hz,
            latency_ms=spec.latency.draw(params_rng),
            bias_sigma_dva=spec.bias_sigma.draw(params_rng),
            noise_sigma_dva=spec.noise_sigma.draw(params_rng),
            isi_jitter_ms=spec.isi_jitter.draw(params_rng),
            seed=derive_seed(seed, rid, "samples"),
        )
        corpus.append(generate_recording(rec_spec, recording_id=rid))
    return corpus


def write_ground_truth(truths, path) -> None:
    """Corpus-level ground-truth table (scalar parameters per recording)."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GROUND_TRUTH_HEADER)
    for gt in truths:
        writer.writerow([
            gt.recording_id, format_float(gt.rate_hz), str(gt.n_targets),
            format_float(gt.latency_ms), format_float(gt.bias_sigma_dva),
            format_float(gt.bias_fixed_dva[0]), format_float(gt.bias_fixed_dva[1]),
            format_float(gt.noise_sigma_dva), format_float(gt.isi_jitter_ms),
            str(gt.seed),
        ])
    atomic_write_text(path, buf.getvalue())
