"""Read and write recordings, quality tables, and corpus manifests.

The canonical recording format is a UTF-8 CSV with header
``t_ms,gaze_x_dva,gaze_y_dva,tgt_x_dva,tgt_y_dva``. Missing gaze cells are
empty (or a literal NaN); target cells must always parse. Adapters map two
external export layouts onto the canonical fields, converting units and
synthesizing timestamps from the nominal rate when the layout lacks a time
column. Floats are written with shortest round-trip formatting, so a write
followed by a read reproduces every value exactly.
"""
from __future__ import annotations

import csv
import io as _io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import GazeRecording, QualityVector, validate_recording

RECORDING_HEADER = ("t_ms", "gaze_x_dva", "gaze_y_dva", "tgt_x_dva", "tgt_y_dva")
QUALITY_HEADER = ("recording_id", "acc_h", "acc_v", "acc_c", "prec_h", "prec_v",
                  "prec_c", "temporal_prec_ms", "n_fixations_used")
MANIFEST_HEADER = ("recording_id", "path", "format_tag", "rate_hz")

# column names and time unit per supported layout; a None time column means
# timestamps are synthesized as i * 1000 / nominal_rate_hz
_LAYOUTS = {
    "canonical": dict(time="t_ms", gx="gaze_x_dva", gy="gaze_y_dva",
                      tx="tgt_x_dva", ty="tgt_y_dva", time_scale=1.0),
    "eyelink-export": dict(time="n", gx="x", gy="y", tx="xT", ty="yT",
                           time_scale=1.0),
    "vr-export": dict(time="time_s", gx="gaze_x_deg", gy="gaze_y_deg",
                      tx="target_x_deg", ty="target_y_deg", time_scale=1000.0),
}
FORMAT_TAGS = tuple(_LAYOUTS)


def format_float(value: float) -> str:
    """Shortest decimal text that parses back to the exact same float."""
    return repr(float(value))


def atomic_write_text(path, text: str) -> None:
    """Write the full text to `path` via a temp file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp.", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_gaze_cell(cell: str) -> float:
    cell = (cell or "").strip()
    if cell == "" or cell.lower() == "nan":
        return np.nan
    return float(cell)


def read_recording(path, format_tag: str = "canonical", nominal_rate_hz: float = 1000.0,
                   recording_id: str | None = None) -> GazeRecording:
    """Parse one recording file into a validated GazeRecording.

    Empty or NaN gaze cells are flagged missing, not dropped. Malformed rows
    abort the read with a message naming the 1-based file line.
    """
    if format_tag not in _LAYOUTS:
        raise ValueError(f"unknown format_tag {format_tag!r} (expected one of {FORMAT_TAGS})")
    layout = _LAYOUTS[format_tag]
    path = Path(path)
    if recording_id is None:
        recording_id = path.stem

    t, gx, gy, tx, ty = [], [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        fields = [name.strip() for name in reader.fieldnames]
        for col in (layout["gx"], layout["gy"], layout["tx"], layout["ty"]):
            if col not in fields:
                raise ValueError(f"{path}: missing column {col!r} for format {format_tag!r}")
        has_time = layout["time"] in fields
        for row in reader:
            line = reader.line_num
            try:
                if has_time:
                    t.append(float(row[layout["time"]]) * layout["time_scale"])
                gx.append(_parse_gaze_cell(row[layout["gx"]]))
                gy.append(_parse_gaze_cell(row[layout["gy"]]))
                tx.append(float(row[layout["tx"]]))
                ty.append(float(row[layout["ty"]]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: malformed row at line {line}: {exc}") from None

    if not gx:
        raise ValueError(f"{path}: zero usable samples")
    if not has_time:
        t = (np.arange(len(gx)) * (1000.0 / nominal_rate_hz)).tolist()
    rec = GazeRecording(
        timestamps_ms=t, gaze_x=gx, gaze_y=gy, tgt_x=tx, tgt_y=ty,
        nominal_rate_hz=nominal_rate_hz, recording_id=recording_id,
    )
    if rec.missing.all():
        raise ValueError(f"{path}: zero usable samples (all gaze missing)")
    return validate_recording(rec)


def recording_to_csv(rec: GazeRecording) -> str:
    """Canonical CSV text for a recording; missing gaze becomes empty cells."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORDING_HEADER)
    for i in range(rec.n_samples):
        writer.writerow([
            format_float(rec.timestamps_ms[i]),
            "" if np.isnan(rec.gaze_x[i]) else format_float(rec.gaze_x[i]),
            "" if np.isnan(rec.gaze_y[i]) else format_float(rec.gaze_y[i]),
            format_float(rec.tgt_x[i]),
            format_float(rec.tgt_y[i]),
        ])
    return buf.getvalue()


def write_recording(rec: GazeRecording, path) -> None:
    """Write a validated recording as canonical CSV (atomic replace)."""
    validate_recording(rec)
    atomic_write_text(path, recording_to_csv(rec))


def write_quality_table(rows, path) -> None:
    """Write (recording_id, QualityVector) rows as CSV, sorted by id."""
    rows = list(rows)
    if not rows:
        raise ValueError("quality table needs at least one row")
    ids = [rid for rid, _ in rows]
    if len(set(ids)) != len(ids):
        dup = sorted({r for r in ids if ids.count(r) > 1})
        raise ValueError(f"duplicate recording_id in quality table: {dup}")
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(QUALITY_HEADER)
    for rid, qv in sorted(rows, key=lambda item: item[0]):
        writer.writerow([rid] + [format_float(v) for v in qv.as_tuple()]
                        + [str(qv.n_fixations_used)])
    atomic_write_text(path, buf.getvalue())


def read_quality_table(path) -> list:
    """Read a quality table back as a list of (recording_id, QualityVector)."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != QUALITY_HEADER:
            raise ValueError(f"{path}: unexpected quality table header {reader.fieldnames}")
        for row in reader:
            try:
                qv = QualityVector(
                    acc_h=float(row["acc_h"]), acc_v=float(row["acc_v"]),
                    acc_c=float(row["acc_c"]), prec_h=float(row["prec_h"]),
                    prec_v=float(row["prec_v"]), prec_c=float(row["prec_c"]),
                    temporal_prec_ms=float(row["temporal_prec_ms"]),
                    n_fixations_used=int(row["n_fixations_used"]),
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: malformed row at line {reader.line_num}: {exc}") from None
            out.append((row["recording_id"], qv))
    if not out:
        raise ValueError(f"{path}: empty quality table")
    return out


@dataclass(frozen=True)
class ManifestEntry:
    recording_id: str
    path: str
    format_tag: str
    rate_hz: float


def read_manifest(path) -> list:
    """Read a corpus manifest; relative entry paths resolve against the
    manifest's own directory."""
    path = Path(path)
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_HEADER:
            raise ValueError(f"{path}: unexpected manifest header {reader.fieldnames}")
        for row in reader:
            rid = row["recording_id"]
            if rid in seen:
                raise ValueError(f"{path}: duplicate recording_id {rid!r}")
            seen.add(rid)
            tag = row["format_tag"]
            if tag not in FORMAT_TAGS:
                raise ValueError(f"{path}: unknown format_tag {tag!r} for {rid!r}")
            entry_path = Path(row["path"])
            if not entry_path.is_absolute():
                entry_path = path.parent / entry_path
            entries.append(ManifestEntry(rid, str(entry_path), tag, float(row["rate_hz"])))
    if not entries:
        raise ValueError(f"{path}: empty manifest")
    return entries


def write_manifest(entries, path) -> None:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in entries:
        writer.writerow([e.recording_id, e.path, e.format_tag, format_float(e.rate_hz)])
    atomic_write_text(path, buf.getvalue())


def read_recording_from_entry(entry: ManifestEntry) -> GazeRecording:
    return read_recording(entry.path, entry.format_tag, entry.rate_hz,
                          recording_id=entry.recording_id)
