import csv
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from thermospec.cli import EXIT_BUDGET, EXIT_CHECKS, EXIT_CONFIG, EXIT_OK, fmt, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SHIFT = """\
[system]
kind = "full"
symbols = {m}

[potential]
kind = "table"
table = {table}

[analysis]
run = {run}
{extra}
"""


def _write(tmp_path, m=2, table="[0.0, 1.0]", run='["pressure", "birkhoff"]', extra=""):
    path = tmp_path / "cfg.toml"
    path.write_text(SHIFT.format(m=m, table=table, run=run, extra=extra))
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fmt_literals():
    assert [fmt(x) for x in (math.inf, -math.inf, math.nan, 0.1)] == ["inf", "-inf", "nan", "0.10000000000000001"]


def test_validate_ok_and_error(tmp_path, capsys):
    assert main(["validate", str(_write(tmp_path))]) == EXIT_OK
    bad = _write(tmp_path, table="[0.0]")
    assert main(["validate", str(bad)]) == EXIT_CONFIG
    assert f"{bad}:7:" in capsys.readouterr().err


def test_constant_potential_single_finite_row(tmp_path):
    cfg = _write(tmp_path, table="[0.0, 0.0]")
    out = tmp_path / "out"
    assert main(["analyze", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = _rows(out / "spectrum.csv")
    finite = [r for r in rows if math.isfinite(float(r["value"]))]
    assert len(finite) == 1
    assert float(finite[0]["alpha"]) == 0.0
    assert float(finite[0]["value"]) == pytest.approx(math.log(2), abs=1e-12)


def test_glued_pressure_matches_closed_form(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", str(CONFIGS / "glued_transition.toml"), "--out", str(out)]) == EXIT_OK
    rows = _rows(out / "pressure.csv")
    q = np.array([float(r["q"]) for r in rows])
    value = np.array([float(r["value"]) for r in rows])
    closed = np.maximum(np.logaddexp(0.0, q), np.logaddexp(2 * q, 3 * q))
    assert np.max(np.abs(value - closed)) < 1e-9
    text = (out / "transitions.txt").read_text()
    data = [line for line in text.splitlines() if line and not line.startswith("#")][1:]
    assert len(data) == 1
    qk, left, right, _ = data[0].split(",")
    assert abs(float(qk)) < 1e-3
    assert float(left) == pytest.approx(0.5, abs=1e-3)
    assert float(right) == pytest.approx(2.5, abs=1e-3)
    statuses = {r["status"] for r in _rows(out / "spectrum.csv")}
    assert "GluedExact" in statuses
    report = (out / "report.txt").read_text()
    for status in statuses:
        assert status in report


def test_oracle_csv_agreement(tmp_path):
    out = tmp_path / "out"
    assert main(["analyze", str(CONFIGS / "binary_entropy.toml"), "--out", str(out)]) == EXIT_OK
    rows = [r for r in _rows(out / "oracle.csv") if int(r["n"]) == 20]
    assert len(rows) == 9
    for r in rows:
        assert float(r["difference"]) == pytest.approx(abs(float(r["oracle"]) - float(r["legendre"])), abs=1e-15)
        assert float(r["difference"]) <= 0.05


def test_out_of_domain_rows_are_minus_inf(tmp_path):
    cfg = _write(tmp_path, extra="[numeric]\nalpha = [1.5]\n")
    out = tmp_path / "out"
    assert main(["analyze", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = [r for r in _rows(out / "spectrum.csv") if float(r["alpha"]) == 1.5]
    assert rows[0]["value"] == "-inf" and rows[0]["status"] == "OutOfDomain"


def test_n_max_budget_exit(tmp_path):
    cfg = _write(tmp_path, run='["pressure", "oracle-compare"]', extra="[numeric]\nalpha = [0.5]\nn_list = [8, 12]\n")
    assert main(["analyze", str(cfg), "--out", str(tmp_path / "o"), "--n-max", "10"]) == EXIT_BUDGET
    assert main(["analyze", str(cfg), "--out", str(tmp_path / "o"), "--n-max", "12"]) == EXIT_OK


def test_count_budget_exit(tmp_path):
    cfg = _write(tmp_path, run='["oracle-compare"]', extra="[numeric]\nalpha = [0.5]\nn_list = [14]\nbudget = 1000\n")
    assert main(["analyze", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_BUDGET


def test_fixtures_verb(capsys):
    assert main(["fixtures", "list"]) == EXIT_OK
    listed = capsys.readouterr().out
    assert "binary-entropy" in listed and "singular" in listed
    assert main(["fixtures", "run", "singular"]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    assert main(["fixtures", "run", "nope"]) == EXIT_CONFIG
    assert EXIT_CHECKS not in (EXIT_OK, EXIT_CONFIG, EXIT_BUDGET)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "thermospec", "validate", str(_write(tmp_path))],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ok" in proc.stdout
