import csv
import io
import json
import subprocess
import sys

import pytest

from piswitch.cli import run
from piswitch.dynamics import CSV_HEADER
from piswitch.sweep import SWEEP_HEADER


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestSteady:
    def test_switching_point(self, capsys):
        code, out, _ = _run(capsys, "steady", "--big-gamma", "1", "--intensity", "0.25")
        assert code == 0
        data = json.loads(out)
        assert abs(data["b_out_re"]) <= 1e-12 and data["b_out_im"] == 0
        assert data["sigma_z"] == -0.25
        assert data["p_noise"] == pytest.approx(0.25, abs=1e-12)

    def test_vacuum(self, capsys):
        code, out, _ = _run(capsys, "steady", "--big-gamma", "1", "--intensity", "0")
        data = json.loads(out)
        assert code == 0
        assert data["sigma_z"] == -0.5
        assert data["p_noise"] == data["p_loss"] == data["b_out_re"] == 0

    def test_complex_amplitude(self, capsys):
        code, out, _ = _run(capsys, "steady", "--bin-re", "0", "--bin-im", "1")
        data = json.loads(out)
        assert code == 0
        assert data["b_out_im"] == pytest.approx(0.6)
        assert data["b_out_re"] == pytest.approx(0.0, abs=1e-15)

    def test_metadata_echo_exact(self, capsys):
        argv = ["steady", "--big-gamma", "0.1234567890123456789", "--gamma-loss", "3e-7",
                "--intensity", "0.333333333333333314829616256247"]
        code, out, _ = _run(capsys, *argv)
        meta = json.loads(out)["metadata"]
        assert code == 0
        assert meta["big_gamma"] == float(argv[2])
        assert meta["gamma_loss"] == float(argv[4])
        assert meta["intensity"] == float(argv[6])

    def test_csv(self, capsys):
        code, out, _ = _run(capsys, "steady", "--intensity", "0", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 1
        assert float(rows[0]["sigma_z"]) == -0.5
        assert rows[0]["amplitude_ratio"] == ""


class TestUsageErrors:
    @pytest.mark.parametrize("argv", [
        ["steady", "--intensity", "1", "--bin-re", "1"],
        ["steady"],
        ["steady", "--intensity", "-1"],
        ["steady", "--intensity", "1", "--bogus"],
        ["steady", "--big-gamma", "0", "--intensity", "1"],
        ["steady", "--intensity", "nan"],
        ["params", "--g", "1"],
        ["linear", "--beta", "0.5", "--beta-sweep", "0.1", "1", "5"],
        ["linear", "--beta", "0.5", "--gamma-loss", "1"],
        ["linear", "--beta", "1.5"],
        ["sweep", "--points", "1"],
        ["sweep", "--grid-min", "2", "--grid-max", "-2"],
        ["simulate", "--drive", "square", "--photons", "2"],
        ["simulate", "--dt", "0", "--intensity", "1"],
        ["pulse-check", "--duration", "0"],
        [],
    ])
    def test_exit_2(self, capsys, argv):
        code, out, err = _run(capsys, *argv)
        assert code == 2
        assert out == ""
        assert err

    def test_no_partial_artifact(self, tmp_path, capsys):
        path = tmp_path / "out.json"
        code, _, _ = _run(capsys, "steady", "--intensity", "-1", "--out", str(path))
        assert code == 2 and not path.exists()

    def test_computation_error_exit_1(self, tmp_path, capsys):
        path = tmp_path / "traj.csv"
        code, out, err = _run(capsys, "simulate", "--intensity", "25", "--dt", "10",
                              "--t-max", "20", "--out", str(path))
        assert code == 1
        assert "Bloch bound" in err and "t=" in err
        assert not path.exists()


class TestSweep:
    def test_default_csv(self, capsys):
        code, out, _ = _run(capsys, "sweep", "--grid-min", "-2", "--grid-max", "2",
                            "--points", "201", "--format", "csv")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == ",".join(SWEEP_HEADER)
        assert len(lines) == 202
        row = dict(zip(SWEEP_HEADER, map(float, lines[101].split(","))))
        assert row["axis_value"] == 0
        assert abs(row["amplitude_ratio"]) <= 1e-12

    def test_json_to_file(self, tmp_path, capsys):
        path = tmp_path / "sweep.json"
        code, out, _ = _run(capsys, "sweep", "--points", "5", "--format", "json",
                            "--out", str(path))
        assert code == 0 and out == ""
        data = json.loads(path.read_text())
        assert [r["axis_value"] for r in data] == [-2, -1, 0, 1, 2]

    def test_workers_do_not_change_bytes(self, capsys):
        _, serial, _ = _run(capsys, "sweep", "--points", "101")
        _, parallel, _ = _run(capsys, "sweep", "--points", "101", "--workers", "4")
        assert serial == parallel


class TestSimulate:
    def test_constant_csv(self, capsys):
        code, out, _ = _run(capsys, "simulate", "--intensity", "0.25", "--t-max", "1",
                            "--dt", "0.01", "--stride", "10")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 12

    def test_square_json_audit(self, capsys):
        code, out, _ = _run(capsys, "simulate", "--drive", "square", "--photons", "2",
                            "--duration", "4", "--stride", "100", "--format", "json")
        data = json.loads(out)
        assert code == 0
        assert data["audit"]["photons_in"] == pytest.approx(2.0, abs=1e-12)
        assert abs(data["audit"]["closure_defect"]) <= 1e-6
        assert data["metadata"]["duration"] == 4.0

    def test_gaussian(self, capsys):
        code, out, _ = _run(capsys, "simulate", "--drive", "gaussian", "--photons", "1",
                            "--duration", "2", "--t-max", "14", "--dt", "0.01",
                            "--format", "json")
        assert code == 0
        assert json.loads(out)["audit"]["photons_in"] == pytest.approx(1.0, abs=1e-6)

    def test_steps(self, capsys):
        code, out, _ = _run(capsys, "simulate", "--drive", "steps", "--step", "0", "0.25",
                            "--step", "5", "1", "--t-max", "30", "--stride", "1000")
        assert code == 0
        last = dict(zip(CSV_HEADER, map(float, out.splitlines()[-1].split(","))))
        assert last["sigma_z"] == pytest.approx(-0.1, abs=1e-6)

    def test_excited_decay(self, capsys):
        code, out, _ = _run(capsys, "simulate", "--intensity", "0", "--initial", "excited",
                            "--t-max", "1", "--stride", "1000")
        last = dict(zip(CSV_HEADER, map(float, out.splitlines()[-1].split(","))))
        assert code == 0
        assert last["t"] == 1.0
        assert last["p_noise"] == pytest.approx(2.0 * 2.718281828459045 ** -2, rel=1e-9)


class TestSmallCommands:
    def test_linear_beta(self, capsys):
        code, out, _ = _run(capsys, "linear", "--beta", "0.7")
        data = json.loads(out)
        assert code == 0
        assert data["linear_ratio"] == pytest.approx(-0.4, abs=1e-14)
        assert data["intensity_ratio"] == pytest.approx(0.16, abs=1e-14)

    def test_linear_from_gamma_loss(self, capsys):
        code, out, _ = _run(capsys, "linear", "--gamma-loss", "2")
        assert code == 0 and json.loads(out)["linear_ratio"] == 0.0

    def test_linear_sweep(self, capsys):
        code, out, _ = _run(capsys, "linear", "--beta-sweep", "0.5", "1", "6")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "beta,gamma_loss,linear_ratio" and len(lines) == 7
        assert float(lines[-1].split(",")[2]) == -1.0

    def test_params(self, capsys):
        code, out, _ = _run(capsys, "params", "--g", "1", "--kappa", "10")
        data = json.loads(out)
        assert code == 0
        assert data["big_gamma"] == pytest.approx(0.1)
        assert data["bad_cavity"] is True

    @pytest.mark.parametrize("duration, exceeds", [("4", True), ("8", False), ("16", False)])
    def test_pulse_check(self, capsys, duration, exceeds):
        code, out, _ = _run(capsys, "pulse-check", "--duration", duration)
        assert code == 0 and json.loads(out)["exceeds"] is exceeds


def test_module_entry_point_black_box():
    ok = subprocess.run([sys.executable, "-m", "piswitch", "pulse-check", "--duration", "4"],
                        capture_output=True, text=True)
    assert ok.returncode == 0 and json.loads(ok.stdout)["exceeds"] is True
    bad = subprocess.run([sys.executable, "-m", "piswitch", "steady", "--nope"],
                         capture_output=True, text=True)
    assert bad.returncode == 2 and bad.stdout == "" and "unrecognized" in bad.stderr
