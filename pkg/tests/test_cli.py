"""Command line: exit codes, outputs and determinism."""
import csv
import io
import json
import subprocess
import sys

import pytest

from sublap.cli import main
from sublap.verify import CSV_HEADER


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_frac_cos_both_routes(capsys):
    assert main(["frac", "--s", "0.5", "--func", "cos", "--xi", "2", "--x", "0"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["x", "balakrishnan", "dtn", "diff", "flags"]
    b, d, diff = float(rows[1][1]), float(rows[1][2]), float(rows[1][3])
    # (-d^2/dx^2)^{1/2} cos(2x) = 2 cos(2x)
    assert b == pytest.approx(2.0, abs=1e-6)
    assert d == pytest.approx(2.0, abs=1e-6)
    assert diff <= 1e-3


def test_frac_accepts_a_instead_of_s(capsys):
    assert main(["frac", "--a", "0", "--func", "cos", "--xi", "2"]) == 0
    assert float(_rows(capsys.readouterr().out)[1][1]) == pytest.approx(2.0, abs=1e-6)


def test_frac_constant_is_zero(capsys):
    assert main(["frac", "--s", "0.3", "--func", "const"]) == 0
    row = _rows(capsys.readouterr().out)[1]
    assert float(row[1]) == 0.0 and float(row[2]) == 0.0


def test_frac_several_points(capsys):
    assert main(["frac", "--s", "0.5", "--func", "cos", "--xi", "1", "--x", "0", "--x", "1.5"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 3
    assert float(rows[2][1]) == pytest.approx(1.0 * __import__("math").cos(1.5), abs=1e-6)


def test_frac_heisenberg_group_decay_flag(capsys):
    code = main(["frac", "--model", "heisenberg", "--s", "0.75", "--func", "gauss"])
    assert code == 0
    row = _rows(capsys.readouterr().out)[1]
    assert "regime:group-decay" in row[4]


@pytest.mark.parametrize("argv", [
    ["frac", "--s", "0.5", "--a", "0.5"],
    ["frac", "--s", "1.5"],
    ["frac"],
    ["frac", "--s", "0.5", "--func", "nope"],
    ["frac", "--s", "0.5", "--func", "cauchy", "--n", "2"],
    ["frac", "--s", "0.5", "--x", "1,2"],
    ["bogus"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_unknown_suite_exits_2_without_report(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["verify", "nosuch"]) == 2
    assert list(tmp_path.iterdir()) == []


def test_bad_config_key_exits_2(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("s = 0.5\ncolour = blue\n")
    assert main(["frac", "--config", str(cfg)]) == 2


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cosine run\ns = 0.5\nfunc = cos\nxi = 3\n")
    assert main(["frac", "--config", str(cfg)]) == 0
    assert float(_rows(capsys.readouterr().out)[1][1]) == pytest.approx(3.0, abs=1e-6)
    assert main(["frac", "--config", str(cfg), "--xi", "2"]) == 0
    assert float(_rows(capsys.readouterr().out)[1][1]) == pytest.approx(2.0, abs=1e-6)


def test_verify_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "scaling.csv"
    code = main(["verify", "scaling", "--n", "1", "--out", str(out)])
    assert code == 0
    rows = _rows(out.read_text())
    assert tuple(rows[0]) == tuple(CSV_HEADER)
    assert rows[0] == ["module", "check", "model", "params", "value", "oracle", "relerr", "tol", "pass"]
    assert len(rows) > 1
    summary = json.loads((tmp_path / "scaling.json").read_text())
    assert set(summary) == {"suite", "passed", "failed", "wall_time_s"}
    assert summary["suite"] == "scaling" and summary["failed"] == 0
    assert summary["passed"] == len(rows) - 1
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == summary


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["verify", "gauge", "--n", "1", "--seed", "7", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_console_script_runs(tmp_path):
    out = tmp_path / "f.csv"
    proc = subprocess.run([sys.executable, "-m", "sublap.cli", "frac", "--s", "0.5", "--func",
                           "cos", "--xi", "2", "--out", str(out)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text() == proc.stdout
