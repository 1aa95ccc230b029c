"""Realism assessment for synthetically degraded corpora.

Two views: per-feature distribution summaries (the numeric substrate of
distribution plots) and a leave-one-sample-out 1-nearest-neighbor two-sample
test over the 7-feature quality vectors. Combined accuracy near 50% means
the classifier cannot tell real from synthetic.
"""
from __future__ import annotations

import io as _io
import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .io import atomic_write_text, format_float
from .quantiles import quantile
from .seeding import derive_seed

FEATURE_COLUMNS = ("acc_h", "acc_v", "acc_c", "prec_h", "prec_v", "prec_c",
                   "temporal_prec_ms")
SUMMARY_HEADER = ("feature", "min", "d10", "d20", "d30", "d40", "d50", "d60",
                  "d70", "d80", "d90", "median", "mean", "max")

_DECILES = tuple(i / 10.0 for i in range(1, 10))


class ZeroVarianceWarning(UserWarning):
    """A feature column had no variance; it passes through unscaled."""


def quality_features(qvs) -> np.ndarray:
    """Raw (n, 7) feature matrix in FEATURE_COLUMNS order."""
    qvs = list(qvs)
    if not qvs:
        raise ValueError("need at least one quality vector")
    return np.array([qv.as_tuple() for qv in qvs], dtype=float)


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-scoring parameters (population statistics)."""

    mean: tuple
    std: tuple

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return (np.asarray(matrix, dtype=float) - np.array(self.mean)) / np.array(self.std)


def fit_standardizer(matrix: np.ndarray) -> Standardizer:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("standardizer requires a matrix with >= 2 rows")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    flat = std == 0.0
    if flat.any():
        names = [FEATURE_COLUMNS[i] if matrix.shape[1] == len(FEATURE_COLUMNS) else str(i)
                 for i in np.flatnonzero(flat)]
        warnings.warn(f"zero-variance feature columns pass through unscaled: {names}",
                      ZeroVarianceWarning, stacklevel=2)
        std = np.where(flat, 1.0, std)
    return Standardizer(mean=tuple(mean), std=tuple(std))


def feature_matrix(qvs, standardizer: Standardizer | None = None) -> tuple:
    """Standardized feature matrix plus the standardizer that produced it.

    With no standardizer given, one is fitted on the input itself; pooled
    comparisons should fit on the concatenation of both sets and pass it in.
    """
    raw = quality_features(qvs)
    if standardizer is None:
        standardizer = fit_standardizer(raw)
    return standardizer.apply(raw), standardizer


@dataclass(frozen=True)
class RepeatAccuracy:
    combined: float
    real: float
    synthetic: float

    def __post_init__(self) -> None:
        for name in ("combined", "real", "synthetic"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} accuracy outside [0, 1]: {v}")
        if abs(self.combined - (self.real + self.synthetic) / 2.0) > 1e-12:
            raise ValueError("combined accuracy must average the per-class accuracies")


@dataclass(frozen=True)
class TwoSampleResult:
    """1-NN two-sample accuracies: medians across repeats plus the per-repeat
    detail (a single run has one repeat)."""

    combined_accuracy: float
    real_accuracy: float
    synthetic_accuracy: float
    per_repeat: tuple
    n_per_class: int
    seed: int

    def range_of(self, attr: str) -> float:
        values = [getattr(r, attr) for r in self.per_repeat]
        return max(values) - min(values)


def one_nn_two_sample(real: np.ndarray, synth: np.ndarray, seed: int = 0) -> TwoSampleResult:
    """Leave-one-sample-out 1-NN classification of pooled feature rows.

    Each of the 2n points takes the label of its nearest Euclidean neighbor
    among the other 2n-1; distance ties resolve to the lowest row index in
    the real-then-synthetic concatenation.
    """
    real = np.asarray(real, dtype=float)
    synth = np.asarray(synth, dtype=float)
    if real.ndim != 2 or synth.ndim != 2 or real.shape != synth.shape:
        raise ValueError(f"real and synthetic matrices must have equal shape, "
                         f"got {real.shape} and {synth.shape}")
    n = real.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows per class, got {n}")
    pooled = np.vstack([real, synth])
    dist = cdist(pooled, pooled)
    np.fill_diagonal(dist, np.inf)
    neighbor = np.argmin(dist, axis=1)  # argmin takes the first (lowest) index on ties
    is_real = np.arange(2 * n) < n
    correct = is_real[neighbor] == is_real
    repeat = RepeatAccuracy(
        combined=float(correct.mean()),
        real=float(correct[:n].mean()),
        synthetic=float(correct[n:].mean()),
    )
    return TwoSampleResult(
        combined_accuracy=repeat.combined,
        real_accuracy=repeat.real,
        synthetic_accuracy=repeat.synthetic,
        per_repeat=(repeat,),
        n_per_class=n,
        seed=seed,
    )


def repeated_assessment(real_qvs, synth_qvs, repeats: int = 5, seed: int = 0) -> TwoSampleResult:
    """Run the 1-NN test `repeats` times on random real subsets.

    Each repeat samples |synth| rows from the real set without replacement
    (draws depend only on seed and repeat index), standardizes with pooled
    statistics of the two sets being compared, and classifies. Aggregates
    are medians across repeats; ranges are available per attribute.
    """
    real_qvs = list(real_qvs)
    synth_qvs = list(synth_qvs)
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    if len(synth_qvs) < 2:
        raise ValueError(f"need at least 2 synthetic rows, got {len(synth_qvs)}")
    if len(real_qvs) < len(synth_qvs):
        raise ValueError(
            f"real set ({len(real_qvs)}) must be at least as large as the "
            f"synthetic set ({len(synth_qvs)})"
        )
    real_raw = quality_features(real_qvs)
    synth_raw = quality_features(synth_qvs)
    n = synth_raw.shape[0]

    results = []
    for r in range(repeats):
        rng = np.random.default_rng(derive_seed(seed, "repeat", r))
        idx = np.sort(rng.choice(real_raw.shape[0], size=n, replace=False))
        real_sub = real_raw[idx]
        scaler = fit_standardizer(np.vstack([real_sub, synth_raw]))
        run = one_nn_two_sample(scaler.apply(real_sub), scaler.apply(synth_raw),
                                seed=derive_seed(seed, "repeat", r))
        results.append(run.per_repeat[0])

    return TwoSampleResult(
        combined_accuracy=float(np.median([r.combined for r in results])),
        real_accuracy=float(np.median([r.real for r in results])),
        synthetic_accuracy=float(np.median([r.synthetic for r in results])),
        per_repeat=tuple(results),
        n_per_class=n,
        seed=seed,
    )


@dataclass(frozen=True)
class FeatureSummary:
    feature: str
    minimum: float
    deciles: tuple  # d10 .. d90
    median: float
    mean: float
    maximum: float


def distribution_summary(qvs) -> list:
    """Per-feature min, deciles, median, mean, max over a corpus."""
    raw = quality_features(qvs)
    out = []
    for j, name in enumerate(FEATURE_COLUMNS):
        col = raw[:, j]
        out.append(FeatureSummary(
            feature=name,
            minimum=float(col.min()),
            deciles=tuple(quantile(col, p) for p in _DECILES),
            median=quantile(col, 0.5),
            mean=float(col.mean()),
            maximum=float(col.max()),
        ))
    return out


def summary_rows_to_csv(summaries, extra_column: tuple | None = None) -> str:
    """CSV text for feature summaries; `extra_column` optionally prepends a
    (name, value) label column for multi-table reports."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(SUMMARY_HEADER)
    if extra_column is not None:
        header.insert(0, extra_column[0])
    writer.writerow(header)
    for s in summaries:
        row = ([s.feature, format_float(s.minimum)]
               + [format_float(d) for d in s.deciles]
               + [format_float(s.median), format_float(s.mean), format_float(s.maximum)])
        if extra_column is not None:
            row.insert(0, extra_column[1])
        writer.writerow(row)
    return buf.getvalue()


def write_distribution_summary(summaries, path) -> None:
    atomic_write_text(path, summary_rows_to_csv(summaries))


def assessment_report_dict(result: TwoSampleResult, repeats: int) -> dict:
    """JSON-compatible report following the median +/- range layout."""
    return {
        "n_per_class": result.n_per_class,
        "seed": result.seed,
        "repeats": repeats,
        "combined_accuracy": {"median": result.combined_accuracy,
                              "range": result.range_of("combined")},
        "real_accuracy": {"median": result.real_accuracy,
                          "range": result.range_of("real")},
        "synthetic_accuracy": {"median": result.synthetic_accuracy,
                               "range": result.range_of("synthetic")},
        "per_repeat": [
            {"combined": r.combined, "real": r.real, "synthetic": r.synthetic}
            for r in result.per_repeat
        ],
    }


def write_assessment_report(result: TwoSampleResult, repeats: int, path) -> None:
    atomic_write_text(path, json.dumps(assessment_report_dict(result, repeats),
                                       indent=2, sort_keys=True) + "\n")
