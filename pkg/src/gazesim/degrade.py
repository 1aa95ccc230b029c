"""Synthetic degradation of high-rate gaze recordings.

Two transform models are provided. The baseline model reduces bandwidth
(zero-phase Butterworth low-pass, then first-order-spline resampling onto the
target grid) and adds stationary Gaussian position noise with one variance
for the whole corpus. The modified model additionally matches the target
corpus distribution per recording: the noise variance comes from a
percentile match of combined spatial precision inverted through a
calibration curve, spatial accuracy is degraded with per-fixation signed
step offsets, and the output timestamps are jittered to mimic the target's
temporal precision.

Noise is injected before the low-pass by default; that ordering is the one
consistent with calibrating the noise variance against post-pipeline
precision, and it can be switched via DegradeConfig.noise_order.

Every operation is a pure function of (recording, plan, seed). Random draws
happen in a fixed order per recording: accuracy magnitudes, then signs, then
position noise, then timestamp jitter.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal

from .metrics import LatencyEstimate, MetricsConfig, estimate_latency, extract_fixations
from .quantiles import percentile_rank, quantile
from .types import (DegradationPlan, EccentricityWeighting, FixationWindow,
                    GazeRecording, QualityVector, CalibrationCurve,
                    validate_recording)
from .io import atomic_write_text

__all__ = [
    "FilterSpec", "DegradeConfig", "AccuracyStep", "AccuracyStepSignal",
    "lowpass_zero_phase", "resample_spline", "nominal_target_timestamps",
    "jitter_timestamps", "add_precision_noise", "degrade_benchmark",
    "percentile_rank", "quantile", "plan_modified", "build_accuracy_signal",
    "apply_accuracy_signal", "degrade_modified", "zero_noise_pass",
    "save_plan", "load_plan",
]

# fraction of combined marginal dispersion carried by each channel when the
# added noise is isotropic: dispersions add in quadrature, so each channel
# receives 1/sqrt(2) of the combined requirement
_CHANNEL_SHARE = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass filter parameters. Order counts one pass; the zero-phase
    forward-backward run squares the magnitude response."""

    cutoff_hz: float
    order: int = 2
    zero_phase: bool = True

    def __post_init__(self) -> None:
        if not self.cutoff_hz > 0:
            raise ValueError(f"cutoff_hz must be positive, got {self.cutoff_hz}")
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")


@dataclass(frozen=True)
class DegradeConfig:
    """Pipeline switches shared by both transform models."""

    filter_order: int = 2
    cutoff_fraction: float = 0.8  # times the target Nyquist frequency
    noise_order: str = "pre"      # inject noise before ("pre") or after ("post") bandwidth reduction
    jitter_correction: bool = False  # divide jitter std by sqrt(2) so ISI std matches the target

    def __post_init__(self) -> None:
        if self.noise_order not in ("pre", "post"):
            raise ValueError(f"noise_order must be 'pre' or 'post', got {self.noise_order!r}")


def _fill_missing_linear(x: np.ndarray) -> tuple:
    """Linearly bridge NaN runs so the IIR filter sees finite data; the
    missing mask is reapplied after filtering."""
    miss = np.isnan(x)
    if not miss.any() or miss.all():
        return x, miss
    idx = np.flatnonzero(~miss)
    filled = x.copy()
    filled[miss] = np.interp(np.flatnonzero(miss), idx, x[idx])
    return filled, miss


def lowpass_zero_phase(rec: GazeRecording, spec: FilterSpec) -> GazeRecording:
    """Butterworth low-pass of the gaze channels; targets and timestamps pass
    through untouched.

    Zero-phase mode filters forward and backward with even (reflective)
    padding of three filter time constants, so the effective magnitude
    response is the squared single-pass response and the delay is zero.
    Missing samples are bridged for filtering and restored to missing after.
    """
    fs = rec.nominal_rate_hz
    if not spec.cutoff_hz < fs / 2:
        raise ValueError(
            f"cutoff {spec.cutoff_hz} Hz must be below the source Nyquist {fs / 2} Hz"
        )
    tau_samples = fs / (2.0 * math.pi * spec.cutoff_hz)
    padlen = max(int(np.ceil(3.0 * tau_samples)), 3 * (2 * spec.order + 1))
    if rec.n_samples <= padlen:
        raise ValueError(
            f"recording shorter than 3x filter warm-up length "
            f"({rec.n_samples} samples <= pad {padlen})"
        )
    sos = _signal.butter(spec.order, spec.cutoff_hz, btype="lowpass", fs=fs, output="sos")

    filtered = {}
    for name in ("gaze_x", "gaze_y"):
        x = getattr(rec, name)
        finite, miss = _fill_missing_linear(x)
        if miss.all():
            filtered[name] = x
            continue
        if spec.zero_phase:
            y = _signal.sosfiltfilt(sos, finite, padtype="even", padlen=padlen)
        else:
            y = _signal.sosfilt(sos, finite)
        y = np.asarray(y, dtype=float)
        y[miss] = np.nan
        filtered[name] = y
    return rec.replace(**filtered)


def _interp_channel(t_new: np.ndarray, t_src: np.ndarray, values: np.ndarray) -> np.ndarray:
    """First-order spline (linear) interpolation with explicit handling of
    exact node hits, so resampling onto the original timestamps is the
    identity and missing flags propagate exactly to outputs whose bracketing
    inputs include a missing sample."""
    out = np.interp(t_new, t_src, values)
    left = np.searchsorted(t_src, t_new, side="left")
    safe = np.minimum(left, t_src.size - 1)
    hit = t_src[safe] == t_new
    out[hit] = values[safe[hit]]
    return out


def resample_spline(rec: GazeRecording, new_timestamps_ms,
                    nominal_rate_hz: float | None = None) -> GazeRecording:
    """Resample all channels onto new timestamps inside the source span."""
    t_new = np.asarray(new_timestamps_ms, dtype=float)
    if t_new.size < 2:
        raise ValueError("need at least 2 output timestamps")
    if np.any(np.diff(t_new) <= 0):
        raise ValueError("new timestamps must be strictly increasing")
    t_src = rec.timestamps_ms
    if t_new[0] < t_src[0] or t_new[-1] > t_src[-1]:
        raise ValueError(
            f"new timestamps [{t_new[0]}, {t_new[-1]}] outside source span "
            f"[{t_src[0]}, {t_src[-1]}]"
        )
    return GazeRecording(
        timestamps_ms=t_new,
        gaze_x=_interp_channel(t_new, t_src, rec.gaze_x),
        gaze_y=_interp_channel(t_new, t_src, rec.gaze_y),
        tgt_x=_interp_channel(t_new, t_src, rec.tgt_x),
        tgt_y=_interp_channel(t_new, t_src, rec.tgt_y),
        nominal_rate_hz=rec.nominal_rate_hz if nominal_rate_hz is None else nominal_rate_hz,
        recording_id=rec.recording_id,
    )


def nominal_target_timestamps(span_ms: float, target_rate_hz: float,
                              start_ms: float = 0.0) -> np.ndarray:
    """Uniform grid at the target rate, from start_ms through the span."""
    period = 1000.0 / target_rate_hz
    if not span_ms > period:
        raise ValueError(f"span {span_ms} ms does not exceed one target period {period} ms")
    n = int(np.floor(span_ms / period + 1e-9)) + 1
    return start_ms + np.arange(n) * period


def jitter_timestamps(timestamps, jitter_sigma_ms: float, rng: np.random.Generator,
                      correction: bool = False) -> np.ndarray:
    """Perturb each stamp of a uniform grid with independent Gaussian noise.

    With correction off the perturbation std equals jitter_sigma_ms, which
    makes the resulting ISI std sqrt(2) times larger (difference of two iid
    perturbations). Correction on divides the applied std by sqrt(2) so the
    ISI std itself lands on jitter_sigma_ms. Perturbations are clamped to
    +/- 0.45 periods, which keeps the output strictly increasing.
    """
    t = np.asarray(timestamps, dtype=float)
    if t.size < 2:
        raise ValueError("need at least 2 timestamps to jitter")
    period = t[1] - t[0]
    if np.max(np.abs(np.diff(t) - period)) > 1e-6 * period:
        raise ValueError("jitter_timestamps requires a uniform input grid")
    if jitter_sigma_ms < 0:
        raise ValueError(f"jitter_sigma_ms must be >= 0, got {jitter_sigma_ms}")
    if jitter_sigma_ms >= 0.45 * period:
        raise ValueError(
            f"jitter_sigma_ms {jitter_sigma_ms} must be below 0.45 x period ({0.45 * period})"
        )
    applied = jitter_sigma_ms / math.sqrt(2.0) if correction else jitter_sigma_ms
    bound = 0.45 * period
    eps = np.clip(rng.normal(0.0, applied, t.size), -bound, bound)
    return t + eps


def add_precision_noise(rec: GazeRecording, sigma0_sq: float, rng: np.random.Generator,
                        eccentricity_weighting: EccentricityWeighting | None = None) -> GazeRecording:
    """Add independent zero-mean Gaussian noise to both gaze channels.

    The per-sample variance is sigma0_sq, optionally scaled by the Gaussian
    eccentricity weighting evaluated at the source gaze position. Targets are
    untouched and missing samples stay missing. Draws are consumed for every
    sample (x channel first, then y) regardless of the missing mask, so the
    stream position is independent of the data.
    """
    if sigma0_sq < 0:
        raise ValueError(f"sigma0_sq must be >= 0, got {sigma0_sq}")
    n = rec.n_samples
    if eccentricity_weighting is None:
        std = math.sqrt(sigma0_sq)
    else:
        with np.errstate(invalid="ignore"):
            std = np.sqrt(sigma0_sq * eccentricity_weighting.alpha(rec.gaze_x, rec.gaze_y))
    noise_x = rng.standard_normal(n) * std
    noise_y = rng.standard_normal(n) * std
    return rec.replace(gaze_x=rec.gaze_x + noise_x, gaze_y=rec.gaze_y + noise_y)


def _bandwidth_filter_spec(target_rate_hz: float, config: DegradeConfig) -> FilterSpec:
    return FilterSpec(cutoff_hz=config.cutoff_fraction * target_rate_hz / 2.0,
                      order=config.filter_order)


def degrade_benchmark(rec: GazeRecording, plan: DegradationPlan,
                      config: DegradeConfig = DegradeConfig(),
                      rng: np.random.Generator | None = None) -> GazeRecording:
    """Baseline transform: position noise plus bandwidth reduction.

    Accuracy offsets and timestamp jitter in the plan are ignored; the
    baseline model has no mechanism for them. Deterministic given
    plan.rng_seed.
    """
    validate_recording(rec)
    if not plan.target_rate_hz < rec.nominal_rate_hz:
        raise ValueError(
            f"target rate {plan.target_rate_hz} Hz must be below the source rate "
            f"{rec.nominal_rate_hz} Hz"
        )
    if rng is None:
        rng = np.random.default_rng(plan.rng_seed)
    spec = _bandwidth_filter_spec(plan.target_rate_hz, config)
    stamps = nominal_target_timestamps(rec.span_ms, plan.target_rate_hz,
                                       start_ms=float(rec.timestamps_ms[0]))
    if config.noise_order == "pre":
        out = add_precision_noise(rec, plan.sigma0_sq, rng, plan.eccentricity_weighting)
        out = lowpass_zero_phase(out, spec)
        out = resample_spline(out, stamps, nominal_rate_hz=plan.target_rate_hz)
    else:
        out = lowpass_zero_phase(rec, spec)
        out = resample_spline(out, stamps, nominal_rate_hz=plan.target_rate_hz)
        out = add_precision_noise(out, plan.sigma0_sq, rng, plan.eccentricity_weighting)
    return out


def zero_noise_pass(rec: GazeRecording, target_rate_hz: float,
                    config: DegradeConfig = DegradeConfig()) -> GazeRecording:
    """Bandwidth reduction alone: the baseline pipeline with zero noise.

    Used to measure how much precision the source recording retains after
    filtering and resampling, which the modified planner subtracts in
    quadrature from the percentile-matched target precision.
    """
    plan = DegradationPlan(target_rate_hz=target_rate_hz, sigma0_sq=0.0)
    return degrade_benchmark(rec, plan, config)


def plan_modified(source_qv: QualityVector, source_post_prec_c: float,
                  source_corpus_qv, target_corpus_qv, calib: CalibrationCurve,
                  target_rate_hz: float, rng_seed: int) -> DegradationPlan:
    """Build a per-recording plan that percentile-matches the target corpus.

    Precision: the recording's combined precision is rank-matched from the
    source corpus into the target corpus; the marginal dispersion still
    needed after the zero-noise pipeline pass is the quadrature gap, split
    evenly between channels (isotropic noise), and inverted through the
    calibration curve. Accuracy: per-channel rank match, with negative
    requirements clamped to zero (the model only degrades). Jitter: the
    median temporal precision of the target corpus.
    """
    source_corpus_qv = list(source_corpus_qv)
    target_corpus_qv = list(target_corpus_qv)
    if not source_corpus_qv or not target_corpus_qv:
        raise ValueError("source and target corpora must be non-empty")
    if source_post_prec_c < 0:
        raise ValueError(f"source_post_prec_c must be >= 0, got {source_post_prec_c}")

    p = percentile_rank(source_qv.prec_c, [q.prec_c for q in source_corpus_qv])
    target_prec = quantile([q.prec_c for q in target_corpus_qv], p)
    marginal_c = math.sqrt(max(target_prec ** 2 - source_post_prec_c ** 2, 0.0))
    sigma0_sq = calib.invert(_CHANNEL_SHARE * marginal_c)

    offsets = {}
    for channel in ("acc_h", "acc_v"):
        src_value = getattr(source_qv, channel)
        p_c = percentile_rank(src_value, [getattr(q, channel) for q in source_corpus_qv])
        tgt_value = quantile([getattr(q, channel) for q in target_corpus_qv], p_c)
        offsets[channel] = max(tgt_value - src_value, 0.0)

    jitter = float(np.median([q.temporal_prec_ms for q in target_corpus_qv]))
    return DegradationPlan(
        target_rate_hz=target_rate_hz,
        sigma0_sq=sigma0_sq,
        acc_offset_h=offsets["acc_h"],
        acc_offset_v=offsets["acc_v"],
        jitter_sigma_ms=jitter,
        rng_seed=rng_seed,
    )


@dataclass(frozen=True)
class AccuracyStep:
    window: FixationWindow
    offset_x: float
    offset_y: float


@dataclass(frozen=True)
class AccuracyStepSignal:
    """Per-fixation signed accuracy offsets, held piecewise-constant from
    each fixation onset until the next one (zero before the first)."""

    steps: tuple

    def offsets_per_sample(self, n_samples: int) -> tuple:
        off_x = np.zeros(n_samples)
        off_y = np.zeros(n_samples)
        for i, step in enumerate(self.steps):
            start = step.window.sample_start
            end = self.steps[i + 1].window.sample_start if i + 1 < len(self.steps) else n_samples
            off_x[start:end] = step.offset_x
            off_y[start:end] = step.offset_y
        return off_x, off_y


def build_accuracy_signal(rec: GazeRecording, plan: DegradationPlan,
                          latency: LatencyEstimate, rng: np.random.Generator,
                          metrics_config: MetricsConfig = MetricsConfig()) -> AccuracyStepSignal:
    """Draw the marginal accuracy degradation signal for one recording.

    For every fixation and channel independently, a magnitude is drawn from
    a normal distribution centered on the plan's requisite offset with std
    chosen so 99.7% of draws fall within 20% of it, then weighted by a
    uniform random sign. Draw order: all magnitudes (x then y), then all
    signs (x then y).
    """
    windows = extract_fixations(rec, latency, metrics_config.discard_ms,
                                metrics_config.keep_ms)
    if not windows:
        raise ValueError(f"{rec.recording_id or 'recording'}: zero fixations for accuracy signal")
    n = len(windows)
    mag_x = rng.normal(plan.acc_offset_h, 0.2 * plan.acc_offset_h / 3.0, n)
    mag_y = rng.normal(plan.acc_offset_v, 0.2 * plan.acc_offset_v / 3.0, n)
    sign_x = rng.integers(0, 2, n) * 2 - 1
    sign_y = rng.integers(0, 2, n) * 2 - 1
    steps = tuple(
        AccuracyStep(window=w, offset_x=float(sx * mx), offset_y=float(sy * my))
        for w, mx, my, sx, sy in zip(windows, mag_x, mag_y, sign_x, sign_y)
    )
    return AccuracyStepSignal(steps=steps)


def apply_accuracy_signal(rec: GazeRecording, sig: AccuracyStepSignal) -> GazeRecording:
    off_x, off_y = sig.offsets_per_sample(rec.n_samples)
    return rec.replace(gaze_x=rec.gaze_x + off_x, gaze_y=rec.gaze_y + off_y)


def degrade_modified(rec: GazeRecording, plan: DegradationPlan,
                     config: DegradeConfig = DegradeConfig(),
                     metrics_config: MetricsConfig = MetricsConfig(),
                     rng: np.random.Generator | None = None) -> GazeRecording:
    """Modified transform: accuracy steps, position noise, bandwidth
    reduction, and resampling onto a jittered target grid.

    The accuracy step signal is aligned on the latency-shifted fixation grid
    of the source recording. Output timestamps are the jittered ones, so the
    result exhibits the planned temporal imprecision. Deterministic given
    plan.rng_seed.
    """
    validate_recording(rec)
    if not plan.target_rate_hz < rec.nominal_rate_hz:
        raise ValueError(
            f"target rate {plan.target_rate_hz} Hz must be below the source rate "
            f"{rec.nominal_rate_hz} Hz"
        )
    if rng is None:
        rng = np.random.default_rng(plan.rng_seed)

    latency = estimate_latency(rec, metrics_config.latency_search_ms,
                               metrics_config.latency_step_ms)
    sig = build_accuracy_signal(rec, plan, latency, rng, metrics_config)
    out = apply_accuracy_signal(rec, sig)

    spec = _bandwidth_filter_spec(plan.target_rate_hz, config)
    if config.noise_order == "pre":
        out = add_precision_noise(out, plan.sigma0_sq, rng, plan.eccentricity_weighting)
        out = lowpass_zero_phase(out, spec)
    else:
        out = lowpass_zero_phase(out, spec)

    nominal = nominal_target_timestamps(rec.span_ms, plan.target_rate_hz,
                                        start_ms=float(rec.timestamps_ms[0]))
    stamps = jitter_timestamps(nominal, plan.jitter_sigma_ms, rng,
                               correction=config.jitter_correction)
    # endpoint jitter may poke past the source span; clip (interior stamps
    # cannot reach the bounds because perturbations are clamped)
    stamps = np.clip(stamps, rec.timestamps_ms[0], rec.timestamps_ms[-1])
    out = resample_spline(out, stamps, nominal_rate_hz=plan.target_rate_hz)
    if config.noise_order == "post":
        out = add_precision_noise(out, plan.sigma0_sq, rng, plan.eccentricity_weighting)
    return out


def plan_to_dict(plan: DegradationPlan, provenance: dict | None = None) -> dict:
    """Flat JSON-compatible mapping for one plan."""
    payload = {
        "target_rate_hz": plan.target_rate_hz,
        "sigma0_sq": plan.sigma0_sq,
        "acc_offset_h": plan.acc_offset_h,
        "acc_offset_v": plan.acc_offset_v,
        "jitter_sigma_ms": plan.jitter_sigma_ms,
        "rng_seed": plan.rng_seed,
        "eccentricity_sigma_s_dva": (None if plan.eccentricity_weighting is None
                                     else plan.eccentricity_weighting.sigma_s_dva),
        "eccentricity_r_max_dva": (None if plan.eccentricity_weighting is None
                                   else plan.eccentricity_weighting.r_max_dva),
    }
    for key, value in (provenance or {}).items():
        payload[str(key)] = value
    return payload


def save_plan(plan: DegradationPlan, path, provenance: dict | None = None) -> None:
    atomic_write_text(path, json.dumps(plan_to_dict(plan, provenance),
                                       indent=2, sort_keys=True) + "\n")


def load_plan(path) -> DegradationPlan:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    weighting = None
    if payload.get("eccentricity_sigma_s_dva") is not None:
        weighting = EccentricityWeighting(
            sigma_s_dva=payload["eccentricity_sigma_s_dva"],
            r_max_dva=payload["eccentricity_r_max_dva"],
        )
    return DegradationPlan(
        target_rate_hz=payload["target_rate_hz"],
        sigma0_sq=payload["sigma0_sq"],
        acc_offset_h=payload.get("acc_offset_h", 0.0),
        acc_offset_v=payload.get("acc_offset_v", 0.0),
        jitter_sigma_ms=payload.get("jitter_sigma_ms", 0.0),
        rng_seed=payload.get("rng_seed", 0),
        eccentricity_weighting=weighting,
    )
