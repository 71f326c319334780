from __future__ import annotations

import io
import json
from contextlib import redirect_stderr, redirect_stdout

import pytest

from crnlab.cli import main


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestAnalyze:
    def test_triangle_fixture(self, models_dir):
        code, out, _ = run_cli("analyze", str(models_dir / "triangle.crn"))
        assert code == 0
        doc = json.loads(out)
        assert doc["deficiency"] == 0
        assert doc["weakly_reversible"] is True

    def test_showcase_fixture(self, models_dir):
        code, out, _ = run_cli("analyze", str(models_dir / "showcase.crn"))
        assert code == 0
        assert json.loads(out)["deficiency"] == 1

    def test_missing_file(self):
        code, _, err = run_cli("analyze", "no_such_model.crn")
        assert code == 2
        assert "not found" in err

    def test_parse_error_reports_location(self, tmp_path):
        bad = tmp_path / "bad.crn"
        bad.write_text("S1 -> S1 @ 1.0\n")
        code, _, err = run_cli("analyze", str(bad))
        assert code == 2
        assert "bad.crn:1:" in err


class TestSimulate:
    def test_deterministic_csv(self, models_dir, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run_cli(
                "simulate", str(models_dir / "mm_infinity.crn"),
                "--init", "0", "--seed", "31", "--max-time", "25",
                "--out", str(path),
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_no_reaction_model(self, models_dir):
        code, out, _ = run_cli("simulate", str(models_dir / "empty.crn"), "--max-time", "5")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t"
        assert lines[1] == "0.0"
        assert lines[2] == "# termination: absorbed"

    def test_event_limit_in_footer(self, models_dir):
        code, out, _ = run_cli(
            "simulate", str(models_dir / "slow_fast_p2.crn"),
            "--init", "0,200", "--max-time", "1e9", "--max-events", "50",
        )
        assert code == 0
        assert out.strip().endswith("# termination: event-limit")

    def test_dimension_mismatch(self, models_dir):
        code, _, err = run_cli(
            "simulate", str(models_dir / "triangle.crn"), "--init", "1", "--max-time", "1"
        )
        assert code == 2
        assert "species" in err


class TestStationary:
    def test_triangle_measure(self, models_dir):
        code, out, _ = run_cli(
            "stationary", str(models_dir / "triangle.crn"), "--window", "30"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["stationarity_residual"] < 1e-8
        assert doc["equilibrium"] == pytest.approx([1.0, 1.0])

    def test_mm_infinity_poisson_table(self, models_dir):
        code, out, _ = run_cli(
            "stationary", str(models_dir / "mm_infinity.crn"),
            "--base-state", "0", "--window", "40",
        )
        assert code == 0
        doc = json.loads(out)
        probs = dict(zip(map(tuple, doc["states"]), doc["probabilities"]))
        import math

        for k in range(6):
            assert probs[(k,)] == pytest.approx(math.exp(-1) / math.factorial(k), rel=1e-6)

    def test_refusal_on_deficiency_one(self, models_dir):
        code, _, err = run_cli("stationary", str(models_dir / "showcase.crn"))
        assert code == 4
        assert "deficiency" in err


class TestExperiment:
    def test_unknown_kind(self, tmp_path, models_dir):
        cfgfile = tmp_path / "bad.json"
        cfgfile.write_text(json.dumps({"kind": "nonsense", "network": str(models_dir / "triangle.crn"), "seed": 1}))
        code, _, err = run_cli("experiment", str(cfgfile))
        assert code == 2
        assert "kind" in err

    def test_schema_violation_names_field(self, tmp_path, models_dir):
        doc = {
            "kind": "scaling",
            "network": str(models_dir / "triangle.crn"),
            "seed": 1,
            "initial": ["N", "N"],
            "replicas": 2,
            # n_values missing
            "space_exponents": [1.0, 1.0],
            "horizon": 1.0,
            "reference": {"type": "triangle-regime", "regime": "a"},
        }
        cfgfile = tmp_path / "bad.json"
        cfgfile.write_text(json.dumps(doc))
        code, _, err = run_cli("experiment", str(cfgfile))
        assert code == 2
        assert "n_values" in err

    def test_invalid_json(self, tmp_path):
        cfgfile = tmp_path / "bad.json"
        cfgfile.write_text("{not json")
        code, _, err = run_cli("experiment", str(cfgfile))
        assert code == 2

    def test_threshold_failure_exits_3(self, tmp_path, models_dir):
        doc = {
            "kind": "scaling",
            "network": str(models_dir / "triangle.crn"),
            "seed": 3,
            "initial": ["N - floor(N/2)", "floor(N/2)"],
            "n_values": [100],
            "replicas": 3,
            "space_exponents": [1.0, 1.0],
            "timescale": {"direction": "speed-up", "exponent": 1.0},
            "horizon": 2.0,
            "grid_points": 40,
            "reference": {"type": "triangle-regime", "regime": "a", "alpha1": 0.5},
            "thresholds": {"final_error_max": 1e-9},
        }
        cfgfile = tmp_path / "strict.json"
        cfgfile.write_text(json.dumps(doc))
        code, out, err = run_cli("experiment", str(cfgfile))
        assert code == 3
        assert json.loads(out)["thresholds_ok"] is False

    def test_small_drift_config_passes(self, tmp_path, models_dir):
        doc = {
            "kind": "drift",
            "network": str(models_dir / "autocatalytic_p3q2.crn"),
            "seed": 4,
            "states": ["N", "2"],
            "n_values": [100],
            "replicas": 30,
            "energy": {"type": "norm"},
            "rule": {"type": "jump-excluding", "reactions": [2]},
            "thresholds": {"change_per_energy_max": -0.05},
        }
        cfgfile = tmp_path / "drift.json"
        cfgfile.write_text(json.dumps(doc))
        code, out, _ = run_cli("experiment", str(cfgfile))
        assert code == 0
        doc = json.loads(out)
        assert doc["thresholds_ok"] is True
        assert doc["rows"][0]["mean_change"] < 0

    def test_bundled_regime_b_fixture_runs(self, configs_dir, tmp_path):
        # report-only fixture: no thresholds to violate
        out_json = tmp_path / "b.json"
        code, _, _ = run_cli(
            "experiment", str(configs_dir / "t1_regime_b.json"), "--out", str(out_json),
            "--jobs", "2",
        )
        assert code == 0
        doc = json.loads(out_json.read_text())
        assert doc["kind"] == "scaling"
        assert len(doc["per_n"]) == 2


def test_experiment_csv_matrix_output(tmp_path, configs_dir):
    out_csv = tmp_path / "errors.csv"
    code, _, _ = run_cli(
        "experiment", str(configs_dir / "slow_fast_occupation.json"),
        "--jobs", "2", "--out", str(tmp_path / "r.json"), "--csv", str(out_csv),
    )
    assert code == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0].startswith("n,mean,stderr,excluded")
    assert lines[1].startswith("300,")


def test_module_entry_point(models_dir):
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "crnlab", "analyze", str(models_dir / "triangle.crn")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert '"deficiency": 0' in proc.stdout
