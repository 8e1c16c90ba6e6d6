"""Command-line front end: outputs, determinism, and exit codes."""

import json

import pytest

from svdkf.cli import main


def run_cli(*argv):
    return main(list(argv))


class TestSimulate:
    def test_row_count_and_header(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run_cli("simulate", "--model", "example1", "--steps", "100",
                       "--seed", "7", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 101
        assert lines[0].startswith("k,x_1,x_2,x_3,x_4,z_1")

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run_cli("simulate", "--model", "example1", "--steps", "50",
                    "--seed", "3", "--out", str(path))
        assert a.read_bytes() == b.read_bytes()

    def test_example2_has_two_measurement_columns(self, tmp_path):
        out = tmp_path / "t.csv"
        run_cli("simulate", "--model", "example2:1e-3", "--steps", "5",
                "--out", str(out))
        header = out.read_text().splitlines()[0]
        assert "z_1" in header and "z_2" in header

    def test_unknown_preset_exits_2(self, capsys):
        assert run_cli("simulate", "--model", "nope.json") == 2
        assert "error" in capsys.readouterr().err

    def test_malformed_model_file_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run_cli("simulate", "--model", str(bad)) == 2


class TestRun:
    def test_csv_report(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run_cli("run", "--model", "example1", "--filters", "all",
                       "--runs", "3", "--steps", "20", "--seed", "1",
                       "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 6
        assert lines[0].startswith("filter,rmse_x1")
        assert lines[1].startswith("kf,")

    def test_single_filter_single_run(self, tmp_path):
        out = tmp_path / "r.csv"
        run_cli("run", "--model", "example1", "--filters", "kf",
                "--runs", "1", "--steps", "10", "--out", str(out))
        assert len(out.read_text().splitlines()) == 2

    def test_json_mirrors_csv_fields(self, tmp_path):
        out = tmp_path / "r.json"
        run_cli("run", "--model", "example1", "--filters", "srkf,svd-kf",
                "--runs", "2", "--steps", "15", "--format", "json",
                "--out", str(out))
        doc = json.loads(out.read_text())
        assert set(doc["filters"]) == {"srkf", "svd_kf"}
        entry = doc["filters"]["svd_kf"]
        assert len(entry["rmse"]) == 4
        assert entry["failed_runs"] == 0

    def test_bad_filter_exits_2(self):
        assert run_cli("run", "--model", "example1",
                       "--filters", "bogus") == 2


class TestSweep:
    def test_small_sweep_records_failures_with_exit_0(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run_cli("sweep", "--deltas", "1e-1,1e-10", "--runs", "3",
                       "--steps", "30", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "filter,0.1,1e-10"
        rows = {ln.split(",")[0]: ln.split(",")[1:] for ln in lines[1:]}
        assert rows["kf"][1] in ("NaN", "Inf")
        assert float(rows["svd_kf"][1]) < 1.0

    def test_range_shorthand(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run_cli("sweep", "--deltas", "1e-1..1e-3", "--runs", "2",
                       "--steps", "10", "--out", str(out)) == 0
        assert out.read_text().splitlines()[0] == "filter,0.1,0.01,0.001"

    def test_malformed_deltas_exit_2(self):
        assert run_cli("sweep", "--deltas", "abc") == 2
        assert run_cli("sweep", "--deltas", "1e-3..1e-1") == 2


class TestLoglik:
    def _value(self, capsys, *extra):
        assert run_cli("loglik", "--model", "example1", "--steps", "25",
                       "--seed", "4", *extra) == 0
        return float(capsys.readouterr().out.strip())

    def test_methods_agree(self, capsys):
        a = self._value(capsys, "--method", "svd")
        b = self._value(capsys, "--method", "conventional")
        assert b == pytest.approx(a, rel=1e-9)

    def test_conventional_on_plain_kf(self, capsys):
        a = self._value(capsys, "--method", "svd")
        c = self._value(capsys, "--filter", "kf",
                        "--method", "conventional")
        assert c == pytest.approx(a, rel=1e-9)

    def test_deterministic_output(self, capsys):
        assert self._value(capsys) == self._value(capsys)

    def test_method_filter_mismatch_exits_2(self):
        assert run_cli("loglik", "--model", "example1", "--filter", "kf",
                       "--method", "svd") == 2

    def test_degenerate_model_errors_cleanly(self, tmp_path):
        # zero noise everywhere makes R_e singular: error, not a traceback
        doc = {"f": [[1.0]], "b": [[0.0]], "g": [[1.0]], "h": [[1.0]],
               "theta": [[0.0]], "r": [[0.0]], "x0_mean": [0.0],
               "pi0": [[0.0]]}
        path = tmp_path / "degenerate.json"
        path.write_text(json.dumps(doc))
        assert run_cli("loglik", "--model", str(path), "--steps", "1") == 2


class TestUsage:
    def test_missing_subcommand(self):
        assert run_cli() == 2

    def test_unknown_flag(self):
        assert run_cli("simulate", "--model", "example1", "--nope") == 2
