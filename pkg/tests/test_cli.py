import json
from pathlib import Path

import numpy as np
import pytest

from gazesim.cli import main
from gazesim.io import read_quality_table


def run(argv):
    return main([str(a) for a in argv])


def tree_bytes(root):
    return {p.relative_to(root): p.read_bytes()
            for p in sorted(Path(root).rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def tiny_source(tmp_path_factory):
    out = tmp_path_factory.mktemp("src_corpus")
    assert run(["synth", "--preset", "eyelink-like", "--n", "4",
                "--seed", "21", "--out", out]) == 0
    return out


@pytest.fixture(scope="module")
def tiny_target_table(tmp_path_factory):
    root = tmp_path_factory.mktemp("tgt_corpus")
    assert run(["synth", "--preset", "vr-like", "--n", "5",
                "--seed", "22", "--out", root]) == 0
    table = root / "quality.csv"
    assert run(["metrics", "--manifest", root / "manifest.csv", "--out", table]) == 0
    return table


@pytest.fixture(scope="module")
def tiny_calibration(tmp_path_factory, tiny_source):
    path = tmp_path_factory.mktemp("calib") / "calib.json"
    assert run(["calibrate", "--manifest", tiny_source / "manifest.csv",
                "--rate-hz", 250, "--grid", "0.05:0.45:0.2",
                "--seed", 3, "--out", path]) == 0
    return path


class TestSynth:
    def test_outputs_present(self, tiny_source):
        assert (tiny_source / "manifest.csv").exists()
        assert (tiny_source / "ground_truth.csv").exists()
        assert (tiny_source / "run_manifest.json").exists()
        assert len(list(tiny_source.glob("eyelink-like_*.csv"))) == 4

    def test_unknown_preset_exits_nonzero(self, tmp_path):
        with pytest.raises(SystemExit):
            run(["synth", "--preset", "webcam-like", "--n", "1", "--out", tmp_path])

    def test_spec_file_corpus(self, tmp_path):
        spec = {"rate_hz": 500.0, "n_targets": 3, "dwell_ms": [900.0, 1100.0],
                "target_extent_dva": [10.0, 8.0], "latency": 180.0,
                "noise_sigma": {"kind": "lognormal", "a": 0.05, "b": 0.3,
                                "clip_hi": 0.2},
                "bias_sigma": 0.1, "isi_jitter": 0.0}
        spec_path = tmp_path / "custom.json"
        spec_path.write_text(json.dumps(spec))
        out = tmp_path / "corpus"
        assert run(["synth", "--spec-file", spec_path, "--n", "2",
                    "--seed", 1, "--out", out]) == 0
        assert len(list(out.glob("custom_*.csv"))) == 2

    def test_synth_needs_preset_or_spec_file(self, tmp_path):
        with pytest.raises(SystemExit, match="preset or"):
            run(["synth", "--n", "1", "--out", tmp_path])


class TestMetrics:
    def test_table_rows_match_corpus(self, tiny_source, tmp_path):
        table = tmp_path / "q.csv"
        assert run(["metrics", "--manifest", tiny_source / "manifest.csv",
                    "--out", table]) == 0
        assert len(read_quality_table(table)) == 4

    def manifest_with_bad_entry(self, tiny_source, tmp_path, bad_path):
        from gazesim.io import ManifestEntry, read_manifest, write_manifest
        entries = read_manifest(tiny_source / "manifest.csv")  # resolves to absolute
        entries.append(ManifestEntry("broken", str(bad_path), "canonical", 1000.0))
        manifest = tmp_path / "manifest.csv"
        write_manifest(entries, manifest)
        return manifest

    def test_corrupt_file_fails_without_skip_bad(self, tiny_source, tmp_path):
        manifest = self.manifest_with_bad_entry(tiny_source, tmp_path,
                                                tmp_path / "missing.csv")
        assert run(["metrics", "--manifest", manifest, "--out", tmp_path / "q.csv"]) == 1

    def test_skip_bad_logs_and_continues(self, tiny_source, tmp_path, caplog):
        bad = tmp_path / "corrupt.csv"
        bad.write_text("t_ms,gaze_x_dva,gaze_y_dva,tgt_x_dva,tgt_y_dva\n0,zz,0,0,0\n")
        manifest = self.manifest_with_bad_entry(tiny_source, tmp_path, bad)
        table = tmp_path / "q.csv"
        with caplog.at_level("WARNING"):
            assert run(["metrics", "--manifest", manifest, "--out", table,
                        "--skip-bad"]) == 0
        assert len(read_quality_table(table)) == 4
        assert "skipping broken" in caplog.text

    def test_deterministic_output(self, tiny_source, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["metrics", "--manifest", tiny_source / "manifest.csv", "--out", a])
        run(["metrics", "--manifest", tiny_source / "manifest.csv", "--out", b])
        assert a.read_bytes() == b.read_bytes()


class TestCalibrate:
    def test_writes_fit(self, tiny_calibration):
        payload = json.loads(tiny_calibration.read_text())
        assert payload["slope"] > 0
        assert len(payload["sigma0_sq_grid"]) == 3
        assert payload["provenance"]["grid"] == "0.05:0.45:0.2"

    def test_bad_grid_rejected(self, tiny_source, tmp_path):
        assert run(["calibrate", "--manifest", tiny_source / "manifest.csv",
                    "--rate-hz", 250, "--grid", "0.4:0.1:0.1",
                    "--out", tmp_path / "c.json"]) == 1


class TestDegrade:
    def test_baseline_with_explicit_sigma(self, tiny_source, tmp_path):
        out = tmp_path / "deg"
        assert run(["degrade", "--manifest", tiny_source / "manifest.csv",
                    "--model", "baseline", "--sigma0-sq", 0.13, "--rate-hz", 250,
                    "--seed", 5, "--out", out]) == 0
        assert len(list(out.glob("*.plan.json"))) == 4
        assert (out / "manifest.csv").exists()
        plan = json.loads(next(iter(sorted(out.glob("*.plan.json")))).read_text())
        assert plan["sigma0_sq"] == 0.13
        assert plan["acc_offset_h"] == 0.0

    def test_baseline_requires_sigma_or_calibration(self, tiny_source, tmp_path):
        with pytest.raises(SystemExit):
            run(["degrade", "--manifest", tiny_source / "manifest.csv",
                 "--model", "baseline", "--rate-hz", 250, "--out", tmp_path / "x"])

    def test_baseline_sigma_from_calibration(self, tiny_source, tiny_target_table,
                                             tiny_calibration, tmp_path):
        out = tmp_path / "deg"
        assert run(["degrade", "--manifest", tiny_source / "manifest.csv",
                    "--model", "baseline", "--rate-hz", 250, "--seed", 5,
                    "--calibration", tiny_calibration,
                    "--target-table", tiny_target_table, "--out", out]) == 0
        plan = json.loads(next(iter(sorted(out.glob("*.plan.json")))).read_text())
        assert plan["sigma0_sq"] > 0

    def test_modified_requires_inputs(self, tiny_source, tmp_path):
        with pytest.raises(SystemExit):
            run(["degrade", "--manifest", tiny_source / "manifest.csv",
                 "--model", "modified", "--rate-hz", 250, "--out", tmp_path / "x"])

    def test_modified_end_to_end_and_rerun_identical(self, tiny_source,
                                                     tiny_target_table,
                                                     tiny_calibration, tmp_path):
        args = ["degrade", "--manifest", tiny_source / "manifest.csv",
                "--model", "modified", "--rate-hz", 250, "--seed", 5,
                "--calibration", tiny_calibration,
                "--target-table", tiny_target_table,
                "--jitter-correction", "on"]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", out_a]) == 0
        assert run(args + ["--out", out_b]) == 0
        assert tree_bytes(out_a) == tree_bytes(out_b)
        plan = json.loads(next(iter(sorted(out_a.glob("*.plan.json")))).read_text())
        assert plan["jitter_sigma_ms"] > 0
        assert plan["calibration_id"]
        assert plan["source_corpus_hash"] and plan["target_corpus_hash"]


class TestAssessAndReport:
    def test_assess_report(self, tiny_target_table, tmp_path):
        out = tmp_path / "report.json"
        assert run(["assess", "--real-table", tiny_target_table,
                    "--synth-table", tiny_target_table, "--repeats", 3,
                    "--seed", 4, "--out", out]) == 0
        payload = json.loads(out.read_text())
        assert payload["repeats"] == 3
        assert payload["combined_accuracy"]["median"] == 0.0  # identical tables

    def test_report_single_table(self, tiny_target_table, tmp_path):
        out = tmp_path / "summary.csv"
        assert run(["report", tiny_target_table, "--out", out]) == 0
        assert out.read_text().splitlines()[0].startswith("feature,min,d10")

    def test_report_multiple_tables(self, tiny_target_table, tmp_path):
        out = tmp_path / "summary.csv"
        assert run(["report", tiny_target_table, tiny_target_table, "--out", out]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("table,feature,")
        assert len(lines) == 1 + 2 * 7

    def test_missing_input_returns_error_code(self, tmp_path):
        assert run(["report", tmp_path / "nope.csv", "--out", tmp_path / "s.csv"]) == 1
