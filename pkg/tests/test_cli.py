import json
import os

import pytest
import yaml

from allocsim.cli import main

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def config_path(name):
    return os.path.join(CONFIG_DIR, name)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestValidate:
    def test_ok(self, capsys):
        assert main(["validate", "--config", config_path("evaluate_twopoint.yaml")]) == 0
        out = capsys.readouterr().out
        assert "OK" in out and "analysis: evaluate" in out

    def test_missing_file_is_config_error(self):
        assert main(["validate", "--config", "/nonexistent.yaml"]) == 2

    def test_bad_field_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("utility: {kind: crra}\nconstraint: {capacity: 0.1}\n"
                        "synth:\n  size: 10\n  noise_sigma: 0\n"
                        "  distribution: {kind: two_point, share_at_risk: 0.5, low: 0, high: 1}\n")
        assert main(["validate", "--config", str(path)]) == 2
        assert "utility" in capsys.readouterr().err


class TestEvaluate:
    def test_spec_example_numbers(self, tmp_path):
        out = str(tmp_path / "run")
        assert main(["evaluate", "--config", config_path("evaluate_twopoint.yaml"),
                     "--out", out]) == 0
        doc = json.loads(read(os.path.join(out, "result.json")))
        assert doc["result"]["welfare"] == 0.1
        assert doc["result"]["random_baseline"] == 0.015
        assert doc["result"]["welfare_ratio"] == pytest.approx(6.666666666666667)
        assert doc["config_hash"]
        assert os.path.exists(os.path.join(out, "manifest.json"))

    def test_subcommand_analysis_mismatch(self, tmp_path):
        assert main(["curve", "--config", config_path("evaluate_twopoint.yaml"),
                     "--out", str(tmp_path / "x")]) == 2

    def test_data_error_exit_code(self, tmp_path):
        cfg = {
            "dataset": {"path": str(tmp_path / "missing.csv"), "outcome_col": "w",
                        "prediction_col": "p"},
            "utility": {"kind": "partitioned", "beta": 0.5, "above_value": 1.0},
            "constraint": {"capacity": 0.5},
            "analysis": {"kind": "evaluate"},
        }
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["evaluate", "--config", str(path), "--out", str(tmp_path / "o")]) == 3


class TestCurve:
    def test_three_rows_nondecreasing(self, tmp_path):
        cfg = yaml.safe_load(read(config_path("curve_improvement.yaml")))
        cfg["analysis"]["grid"] = [0.0, 0.5, 1.0]
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(cfg))
        out = str(tmp_path / "run")
        assert main(["curve", "--config", str(path), "--out", out, "--format", "json"]) == 0
        rows = json.loads(read(os.path.join(out, "table.json")))
        assert len(rows) == 3
        gains = [r["gain"] for r in rows]
        assert gains == sorted(gains)


class TestSynthRoundTrip:
    def test_csv_pipeline_matches_in_memory(self, tmp_path):
        pop_csv = str(tmp_path / "pop.csv")
        assert main(["synth", "--config", config_path("synth_twopoint.yaml"),
                     "--out", pop_csv]) == 0

        base = yaml.safe_load(read(config_path("curve_improvement.yaml")))
        scenario_common = {
            "utility": base["utility"],
            "constraint": base["constraint"],
            "policy": base["policy"],
            "analysis": {"kind": "evaluate"},
        }
        synth_cfg = {"synth": yaml.safe_load(read(config_path("synth_twopoint.yaml")))["synth"],
                     **scenario_common}
        file_cfg = {
            "dataset": {"path": pop_csv, "outcome_col": "outcome",
                        "prediction_col": "prediction", "labeled_col": "labeled",
                        "id_col": "id", "direction": "higher_is_risk"},
            **scenario_common,
        }
        p1, p2 = tmp_path / "a.yaml", tmp_path / "b.yaml"
        p1.write_text(yaml.safe_dump(synth_cfg))
        p2.write_text(yaml.safe_dump(file_cfg))
        o1, o2 = str(tmp_path / "o1"), str(tmp_path / "o2")
        assert main(["evaluate", "--config", str(p1), "--out", o1]) == 0
        assert main(["evaluate", "--config", str(p2), "--out", o2]) == 0
        d1 = json.loads(read(os.path.join(o1, "result.json")))
        d2 = json.loads(read(os.path.join(o2, "result.json")))
        assert d1["result"] == d2["result"]


class TestDeterminism:
    def test_repeat_runs_byte_identical(self, tmp_path):
        out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
        for out in (out1, out2):
            assert main(["break-even", "--config", config_path("breakeven_band.yaml"),
                         "--out", out]) == 0
        assert read(os.path.join(out1, "result.json")) == read(os.path.join(out2, "result.json"))
        assert read(os.path.join(out1, "table.csv")) == read(os.path.join(out2, "table.csv"))

    def test_worker_counts_byte_identical(self, tmp_path):
        out1, out4 = str(tmp_path / "w1"), str(tmp_path / "w4")
        assert main(["optimize", "--config", config_path("optimize_toy.yaml"),
                     "--out", out1, "--workers", "1"]) == 0
        assert main(["optimize", "--config", config_path("optimize_toy.yaml"),
                     "--out", out4, "--workers", "4"]) == 0
        assert read(os.path.join(out1, "result.json")) == read(os.path.join(out4, "result.json"))
        assert read(os.path.join(out1, "table.csv")) == read(os.path.join(out4, "table.csv"))

    def test_seed_override_changes_seed_field(self, tmp_path):
        out = str(tmp_path / "s")
        assert main(["evaluate", "--config", config_path("evaluate_twopoint.yaml"),
                     "--out", out, "--seed-override", "77"]) == 0
        doc = json.loads(read(os.path.join(out, "result.json")))
        assert doc["seed"] == 77


class TestUsage:
    def test_unknown_subcommand_exits_nonzero_with_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate", "--config", "x"])
        assert exc.value.code != 0
        assert "usage" in capsys.readouterr().err.lower()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
