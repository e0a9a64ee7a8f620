import csv
import json

import pytest

from begflow import cli
from begflow.fixtures import OracleResult


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_simulate_pinned(tmp_path, capsys):
    cfg = write(tmp_path, "k = 0.5\ngamma = 3\nzeta = 1e-6  # pinned\nepsilon = 0.03125\n")
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert "stop_reason=pinned-steady" in capsys.readouterr().out
    assert len((out / "trace.jsonl").read_text().splitlines()) == 2
    header = json.loads((out / "run_header.json").read_text())
    assert header["config"]["zeta"] == "1e-6" and header["config"]["minimizer"] == "structured"


def test_simulate_gamma_low_constant_nz(tmp_path):
    cfg = write(tmp_path, "gamma = 1\nzeta = 0.5\nmax_steps = 6\n")
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", cfg, "--out", str(out), "--audit-candidates"]) == 0
    rows = list(csv.DictReader(open(out / "sides.csv")))
    assert len(rows) >= 2 and len({r["nZ"] for r in rows}) == 1
    assert (out / "audit.csv").exists()


def test_invalid_k(tmp_path, capsys):
    cfg = write(tmp_path, "k = 0.2\n")
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "(1/3, 1)" in capsys.readouterr().err


def test_gamma_two_warns(tmp_path):
    cfg = write(tmp_path, "gamma = 2\n")
    with pytest.warns(UserWarning, match="gamma = 2"):
        assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_bad_config(tmp_path):
    assert cli.main(["simulate", "--config", write(tmp_path, "colour = red\n"), "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--config", write(tmp_path, "no equals sign\n"), "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--config", write(tmp_path, "minimizer = magic\n"), "--out", str(tmp_path)]) == 2


def test_runtime_failure(tmp_path):
    cfg = write(tmp_path, "P = 0.001\nD = 0.001\ncenter = 0.1,0.1\nepsilon = 0.25\n")
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_continuum_zero_horizon(tmp_path):
    cfg = write(tmp_path, "T = 0\n")
    out = tmp_path / "o"
    assert cli.main(["continuum", "--config", cfg, "--out", str(out), "--branch", "ceil"]) == 0
    rows = list(csv.reader(open(out / "continuum.csv")))
    assert len(rows) == 2 and rows[1][0] == "0.0"
    assert float(rows[1][1]) == pytest.approx(0.375, abs=1e-12)


def test_compare_single_epsilon(tmp_path, capsys):
    cfg = write(tmp_path, "zeta = 0.5\nT = 0.02\nepsilons = 0.0625\n")
    out = tmp_path / "o"
    assert cli.main(["compare", "--config", cfg, "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "compare.csv")))
    assert rows[0] == ["epsilon", "sup_hausdorff"] and len(rows) == 2
    assert float(rows[1][0]) == 0.0625 and float(rows[1][1]) >= 0


def test_oracle_check(tmp_path, capsys):
    assert cli.main(["oracle-check", "--out", str(tmp_path)]) == 0
    assert "max_discrepancy=0.0" in capsys.readouterr().out


def test_oracle_mismatch_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_oracle", lambda fx: [OracleResult("x", 1.0, 1.5)])
    assert cli.main(["oracle-check", "--out", str(tmp_path)]) == 3


def test_byte_identical_outputs(tmp_path):
    cfg = write(tmp_path, "gamma = 1\nzeta = 0.5\nmax_steps = 4\nsurfactant = 130\n")
    for name in ("a", "b"):
        assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / name), "--seed", "7"]) == 0
    for f in ("trace.jsonl", "sides.csv", "run_header.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
