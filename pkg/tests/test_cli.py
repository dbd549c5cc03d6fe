import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from igeo import complexity as cx
from igeo.cli import fmt, main, parse_axis
from igeo.errors import AccuracyError, ArgumentError

MODEL = ["--r", "0.5", "0.5", "--lambda", "0.5", "1.5", "--xi", "1", "1"]


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("IGEO_OUTPUT_DIR", str(tmp_path))
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestCurvature:
    def test_prints_scalar_and_writes_files(self, capsys, out_root):
        code, out, _ = run(capsys, "curvature", *MODEL, "--out", "c")
        assert code == 0
        assert "scalar curvature: -2.2857142857142856" in out
        rows = read_csv(out_root / "c" / "curvature.csv")
        assert rows[0] == ["block", "r", "mu", "sigma", "R11", "R12", "R22"]
        assert float(rows[1][4]) == -1 / 1.75
        assert json.loads((out_root / "c" / "curvature.json").read_text())

    def test_baseline(self, capsys):
        code, out, _ = run(capsys, "curvature", "--r", "0.5", "--baseline")
        assert code == 0 and "scalar curvature: -1.0" in out

    def test_check_numeric(self, capsys):
        code, out, _ = run(capsys, "curvature", *MODEL, "--check-numeric")
        dev = float(out.split("christoffel max deviation")[1].split(":")[1].split()[0])
        assert code == 0 and dev < 1e-6

    def test_bad_r_exit_one(self, capsys):
        code, _, err = run(capsys, "curvature", "--r", "1.5")
        assert code == 1 and "r[0] outside (0,1)" in err

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"r": [0.9], "lambda": [1], "xi": [1]}))
        code, out, _ = run(capsys, "curvature", "--config", str(cfg), "--r", "0.5")
        assert code == 0 and f"scalar curvature: {fmt(-2 / 1.75)}" in out

    def test_config_errors_one_per_line(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"r": [2.0], "lambda": [-1], "xi": [1], "bogus": 1}))
        code, _, err = run(capsys, "curvature", "--config", str(cfg))
        assert code == 1 and len(err.strip().splitlines()) == 3

    def test_duplicate_key_exit_one(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"r": [0.5], "r": [0.5], "lambda": [1], "xi": [1]}')
        code, _, err = run(capsys, "curvature", "--config", str(cfg))
        assert code == 1 and "duplicate key 'r'" in err

    def test_missing_config_file_exit_two(self, capsys, tmp_path):
        code, _, _ = run(capsys, "curvature", "--config", str(tmp_path / "absent.json"))
        assert code == 2

    def test_usage_error_exit_one(self, capsys):
        assert run(capsys, "curvature", "--nonsense")[0] == 1
        assert run(capsys, "frobnicate")[0] == 1


class TestGeodesic:
    def test_analytic_output(self, capsys, out_root):
        code, _, _ = run(capsys, "geodesic", *MODEL, "--samples", "11", "--format", "csv", "json",
                         "gnuplot-data")
        assert code == 0
        d = out_root / "igeo-out"
        rows = read_csv(d / "trajectory.csv")
        assert rows[0] == ["tau", "block", "chart", "mu", "sigma", "dmu", "dsigma"]
        assert len(rows) == 1 + 11 * 2
        summary = json.loads((d / "geodesic_summary.json").read_text())
        assert summary["mode"] == "analytic" and "hypothesis_check" in summary
        assert (d / "geodesic_sigma_1.dat").exists()

    def test_csv_round_trips_exactly(self, capsys, out_root):
        run(capsys, "geodesic", *MODEL, "--samples", "5", "--chart", "original")
        from igeo.geodesic import analytic_geodesic_original
        from igeo.manifold import ModelParams
        p = ModelParams(r=[0.5, 0.5], lam=[0.5, 1.5], xi=[1, 1])
        row = read_csv(out_root / "igeo-out" / "trajectory.csv")[3]
        mu, sg = analytic_geodesic_original(float(row[0]), p, int(row[1]))
        assert float(row[3]) == mu and float(row[4]) == sg

    def test_canonical_gap(self, capsys):
        code, out, _ = run(capsys, "geodesic", *MODEL, "--mode", "canonical")
        gap = float(out.split("sup gap to analytic solution:")[1].split()[0])
        assert code == 0 and gap < 1e-6

    def test_full_drift(self, capsys):
        code, out, _ = run(capsys, "geodesic", *MODEL, "--mode", "full", "--span", "20")
        drift = float(out.split("relative squared speed):")[1].split()[0])
        assert code == 0 and drift < 1e-7
        assert "sup gap" not in out

    def test_singularity_exit_two(self, capsys):
        code, _, err = run(capsys, "geodesic", "--r", "0.5", "--lambda", "1", "--xi", "1", "--mode", "canonical",
                           "--position", "0", "0.000000000002", "--velocity", "0",
                           "-0.000000000002")
        assert code == 2 and "last good tau" in err

    def test_wrong_initial_length_exit_one(self, capsys):
        code, _, _ = run(capsys, "geodesic", *MODEL, "--mode", "full", "--position", "0", "1",
                         "--velocity", "1", "0")
        assert code == 1


class TestIge:
    def test_report(self, capsys, out_root):
        code, out, _ = run(capsys, "ige", *MODEL, "--tau-points", "7")
        assert code == 0
        exponent = float(out.split("power-law fit exponent:")[1].split()[0])
        assert abs(exponent + 1) < 0.01
        assert "uncorrelated baseline at tau=1000000.0: 2000000.0" in out
        rows = read_csv(out_root / "igeo-out" / "ige_report.csv")
        assert rows[0] == ["tau", "v_closed", "v_quadrature", "s_closed", "saturation_gap"]
        assert len(rows) == 8
        sat = cx.lambda1(0.5) ** 2
        for row in rows[1:]:
            assert float(row[4]) == float(row[1]) - sat
        summary = json.loads((out_root / "igeo-out" / "ige_summary.json").read_text())
        assert len(summary["blocks"]) == 2 and summary["max_relative_gap"] < 1e-9

    def test_closed_mode_leaves_quadrature_blank(self, capsys, out_root):
        assert run(capsys, "ige", *MODEL, "--tau-points", "3", "--modes", "closed")[0] == 0
        rows = read_csv(out_root / "igeo-out" / "ige_report.csv")
        assert all(r[2] == "" for r in rows[1:])

    def test_entropy_domain_exit_two(self, capsys):
        code, _, err = run(capsys, "ige", "--r", "0.5", "--lambda", "10", "--xi", "0.1", "--tau-start", "0.01",
                           "--tau-end", "1", "--tau-points", "3", "--modes", "closed")
        assert code == 2 and "block 0" in err

    def test_accuracy_failure_exit_three(self, capsys, monkeypatch):
        def capped(*args, **kwargs):
            raise AccuracyError("quadrature reached the interval cap", estimate=0.0, error=1.0)

        monkeypatch.setattr(cx.quadrature, "integrate", capped)
        code, _, err = run(capsys, "ige", "--r", "0.5", "--lambda", "0.5", "--xi", "1", "--tau-points", "3")
        assert code == 3 and "accuracy not achieved" in err

    def test_determinant_mode(self, capsys, out_root):
        assert run(capsys, "ige", *MODEL, "--tau-start", "10", "--tau-end", "100", "--tau-points", "2",
                   "--density-mode", "determinant")[0] == 0
        summary = json.loads((out_root / "igeo-out" / "ige_summary.json").read_text())
        assert summary["density_mode"] == "determinant" and len(summary["v_determinant"]) == 2


class TestSweep:
    def test_lambda1_increases_along_r(self, capsys, out_root):
        code, _, _ = run(capsys, "sweep", "--r", "0.5", "--lambda", "1", "--xi", "1", "--axis", "r=0.1:0.8:8",
                         "--quantities", "lambda1")
        rows = read_csv(out_root / "igeo-out" / "sweep.csv")
        assert code == 0 and rows[0] == ["index", "r", "lambda", "xi", "l", "lambda1"]
        assert np.all(np.diff([float(r[5]) for r in rows[1:]]) > 0)

    def test_grid_order(self, capsys, out_root):
        code, _, _ = run(capsys, "sweep", "--r", "0.5", "--lambda", "1", "--xi", "1", "--axis", "r=0.1:0.9:9",
                         "--axis", "xi=0.1:0.5:5", "--ige-tau", "1e3", "--out", "s")
        rows = read_csv(out_root / "s" / "sweep.csv")
        assert code == 0 and len(rows) == 46
        assert rows[0][-1] == "ige_tau=1000.0"
        assert [float(x) for x in rows[1][1:4]] == [0.1, 1.0, 0.1]
        assert [float(x) for x in rows[2][1:4]] == [0.1, 1.0, 0.2]
        manifest = json.loads((out_root / "s" / "sweep_manifest.json").read_text())
        assert manifest["rows"] == 45 and manifest["axis_order"] == ["r", "lambda", "xi", "l"]

    def test_cap(self, capsys):
        code, _, err = run(capsys, "sweep", "--r", "0.5", "--lambda", "1", "--xi", "1",
                           "--axis", "r=0.1:0.9:9", "--max-points", "5")
        assert code == 1 and "--allow-large-grid" in err
        assert run(capsys, "sweep", "--r", "0.5", "--lambda", "1", "--xi", "1", "--axis", "r=0.1:0.9:9",
                   "--max-points", "5", "--allow-large-grid")[0] == 0

    def test_parse_axis(self):
        assert parse_axis("r=0.1,0.2") == ("r", [0.1, 0.2])
        assert parse_axis("l=1:3:3") == ("l", {"start": 1.0, "stop": 3.0, "count": 3})
        with pytest.raises(ArgumentError):
            parse_axis("q=1")
        with pytest.raises(ArgumentError):
            parse_axis("r=a,b")


class TestValidate:
    def test_list(self, capsys):
        code, out, _ = run(capsys, "validate", "--list")
        names = out.split()
        assert code == 0 and len(names) == 14
        assert {"christoffel-oracle", "igc-equivalence", "determinism"} <= set(names)

    def test_single_suite(self, capsys):
        code, out, _ = run(capsys, "validate", "--suite", "saturation", "--suite", "ricci-oracle")
        assert code == 0 and out.count("[PASS]") == 2 and "2/2 suites passed" in out

    def test_unknown_suite(self, capsys):
        assert run(capsys, "validate", "--suite", "nope")[0] == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "igeo", "curvature", "--r", "0.5", "--baseline"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode == 0 and "-1.0" in res.stdout
