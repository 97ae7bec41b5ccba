"""Command-line interface: schema, determinism, formats and exit codes."""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from asian_spectral.cli import CSV_FIELDS, EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, read_config, run

GOLDEN = Path(__file__).parent / "golden" / "call_both.json"
BASE = ["--spot", "2", "--strike", "2", "--rate", "0.05", "--vol", "0.5", "--expiry", "1"]
CORE_KEYS = ["inputs", "dimensionless", "method", "value", "quad_error_estimate",
             "mc_mean", "mc_stderr", "parity_residual", "warnings"]


def invoke(capsys, argv):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def assert_close_tree(got, want, path="$"):
    if isinstance(want, dict):
        assert list(got) == list(want), path
        for key in want:
            assert_close_tree(got[key], want[key], f"{path}.{key}")
    elif isinstance(want, list):
        assert len(got) == len(want), path
        for i, (g, w) in enumerate(zip(got, want)):
            assert_close_tree(g, w, f"{path}[{i}]")
    elif isinstance(want, float):
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12), path
    else:
        assert got == want, path


class TestSchema:
    def test_golden_file(self, capsys):
        argv = BASE + ["--kind", "call", "--method", "both", "--seed", "42", "--paths", "20000", "--parity-check"]
        code, out, _ = invoke(capsys, argv)
        assert code == EXIT_OK
        assert_close_tree(json.loads(out), json.loads(GOLDEN.read_text()))

    @pytest.mark.parametrize("method", ["spectral", "mc", "both"])
    def test_core_keys_per_method(self, capsys, method):
        code, out, _ = invoke(capsys, BASE + ["--method", method, "--paths", "4000"])
        assert code == EXIT_OK
        report = json.loads(out)
        assert list(report)[:len(CORE_KEYS)] == CORE_KEYS
        assert (report["value"] is None) == (method == "mc")
        assert (report["mc_mean"] is None) == (method == "spectral")

    def test_both_reports_difference(self, capsys):
        _, out, _ = invoke(capsys, BASE + ["--method", "both", "--paths", "20000"])
        report = json.loads(out)
        assert report["difference"] == pytest.approx(report["value"] - report["mc_mean"], abs=1e-15)
        assert report["within_3_sigma"] is True


class TestDeterminism:
    def test_byte_identical(self, capsys):
        argv = BASE + ["--method", "both", "--seed", "7", "--paths", "10000"]
        _, first, _ = invoke(capsys, argv)
        _, second, _ = invoke(capsys, argv)
        assert first == second

    def test_threads_do_not_change_output(self, capsys):
        argv = BASE + ["--method", "mc", "--paths", "40000"]
        _, one, _ = invoke(capsys, argv + ["--threads", "1"])
        _, three, _ = invoke(capsys, argv + ["--threads", "3"])
        assert one == three


class TestValues:
    def test_zero_strike_put(self, capsys):
        argv = ["--spot", "2", "--strike", "0", "--rate", "0.05", "--vol", "0.5", "--expiry", "1", "--kind", "put"]
        _, out, _ = invoke(capsys, argv)
        assert json.loads(out)["value"] == 0.0

    def test_parity_check(self, capsys):
        _, out, _ = invoke(capsys, BASE + ["--strike", "2.2", "--kind", "put", "--parity-check"])
        assert abs(json.loads(out)["parity_residual"]) <= 1e-12

    def test_small_tau_warning_is_reported(self, capsys):
        argv = ["--spot", "2", "--strike", "2", "--rate", "0.05", "--vol", "0.2", "--expiry", "1"]
        code, out, _ = invoke(capsys, argv)
        assert code == EXIT_OK
        warnings = json.loads(out)["warnings"]
        assert len(warnings) == 1 and warnings[0].startswith("SmallTauWarning")

    def test_umax_and_rel_tol_forwarded(self, capsys):
        _, a, _ = invoke(capsys, BASE + ["--umax", "90", "--rel-tol", "1e-9"])
        _, b, _ = invoke(capsys, BASE)
        assert json.loads(a)["value"] == pytest.approx(json.loads(b)["value"], abs=1e-9)
        assert json.loads(a)["n_integrand_evals"] != json.loads(b)["n_integrand_evals"]


class TestFormats:
    def test_csv(self, capsys):
        _, out, _ = invoke(capsys, BASE + ["--output", "csv", "--method", "both", "--paths", "4000"])
        rows = list(csv.DictReader(io.StringIO(out)))
        assert out.splitlines()[0] == ",".join(CSV_FIELDS)
        assert len(rows) == 1
        assert float(rows[0]["value"]) == pytest.approx(0.2464156905, abs=1e-9)
        assert rows[0]["within_3_sigma"] == "True"

    def test_csv_blank_for_missing(self, capsys):
        _, out, _ = invoke(capsys, BASE + ["--output", "csv"])
        row = next(csv.DictReader(io.StringIO(out)))
        assert row["mc_mean"] == "" and row["parity_residual"] == ""

    def test_text(self, capsys):
        _, out, _ = invoke(capsys, BASE + ["--output", "text", "--method", "both", "--paths", "4000"])
        assert "spectral value" in out and "monte carlo mean" in out and "within 3 sigma" in out


class TestConfigFile:
    def test_file_values_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# benchmark\nspot = 2\nstrike=2\nrate=0.05\nvol=0.5\nexpiry=1\nkind=put\nrel-tol=1e-9\n")
        _, out, _ = invoke(capsys, ["--config", str(cfg)])
        report = json.loads(out)
        assert report["inputs"]["kind"] == "put"
        assert report["value"] == pytest.approx(0.1980515195, abs=1e-9)
        _, out, _ = invoke(capsys, ["--config", str(cfg), "--kind", "call"])
        assert json.loads(out)["inputs"]["kind"] == "call"

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("spot=2\ncolour=blue\n")
        code, _, err = invoke(capsys, ["--config", str(cfg)])
        assert code == EXIT_INVALID and "colour" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = invoke(capsys, ["--config", str(tmp_path / "none.cfg")])
        assert code == EXIT_INVALID

    def test_read_config_types(self, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text("paths = 5000\nparity_check = yes\nseed=3  # trailing comment\n")
        assert read_config(str(cfg)) == {"paths": 5000, "parity_check": True, "seed": 3}


class TestExitCodes:
    @pytest.mark.parametrize("flag,value", [("--vol", "-0.1"), ("--expiry", "0"), ("--spot", "-2")])
    def test_invalid_market(self, capsys, flag, value):
        argv = list(BASE)
        argv[argv.index(flag) + 1] = value
        code, out, err = invoke(capsys, argv)
        assert code == EXIT_INVALID
        assert flag.lstrip("-") in err
        assert out == ""

    def test_unknown_flag(self, capsys):
        code, _, err = invoke(capsys, BASE + ["--bogus"])
        assert code == EXIT_INVALID and "bogus" in err

    def test_missing_required(self, capsys):
        code, _, err = invoke(capsys, ["--spot", "2"])
        assert code == EXIT_INVALID and "strike" in err

    def test_invalid_mc_config(self, capsys):
        code, _, err = invoke(capsys, BASE + ["--method", "mc", "--paths", "10"])
        assert code == EXIT_INVALID and "n_paths" in err

    def test_numerical_failure(self, capsys):
        code, _, err = invoke(capsys, BASE + ["--umax", "12"])
        assert code == EXIT_NUMERICAL and "numerical failure" in err

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "asian_spectral", *BASE, "--kind", "put"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert math.isclose(json.loads(proc.stdout)["value"], 0.1980515195, abs_tol=1e-9)
