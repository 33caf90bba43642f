import json
import subprocess
import sys

import numpy as np
import pytest

from rdmkit import io
from rdmkit.cli import run_cli


@pytest.fixture
def diag2(tmp_path):
    path = tmp_path / "diag2.json"
    path.write_text(json.dumps({"eigenvalues": [0.5, 0.5]}))
    return path


def write_config(tmp_path, **over):
    cfg = {"sector": "fermi", "density": 0.5, "volumes": [20, 40], "spectrum_family": {"type": "uniform"},
           "k_max": 2, "observable_seed": 0}
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_xi_command(diag2, tmp_path, capsys):
    out = tmp_path / "xi.json"
    assert run_cli(["xi", "--state", str(diag2), "--N", "4", "--sector", "fermi", "--out", str(out)]) == 0
    np.testing.assert_allclose(json.loads(out.read_text())["xi"], [1, 1, 0.25, 0, 0])
    assert capsys.readouterr().out.count("\n") == 1


def test_contract_command(diag2, tmp_path):
    out = tmp_path / "c.json"
    argv = ["contract", "--state", str(diag2), "--n", "2", "--k", "1", "--sector", "bose", "--path", "explicit",
            "--out", str(out)]
    assert run_cli(argv) == 0
    raw = json.loads(out.read_text())
    np.testing.assert_allclose(io.matrix_from_dict(raw), np.diag([3 / 8, 3 / 8]))
    assert {k: raw[k] for k in ("n", "k", "sector", "path", "normalized")} == {
        "n": 2, "k": 1, "sector": "bose", "path": "explicit", "normalized": False}
    assert raw["xi_n"] == pytest.approx(0.75)


def test_contract_full_matrix_input(tmp_path):
    rho = np.array([[0.6, 0.1j], [-0.1j, 0.4]])
    state = tmp_path / "rho.json"
    io.write_state(state, rho)
    out = tmp_path / "c.json"
    assert run_cli(["contract", "--state", str(state), "--n", "2", "--k", "1", "--sector", "fermi",
                    "--path", "bruteforce", "--normalized", "--out", str(out)]) == 0
    assert np.trace(io.matrix_from_dict(json.loads(out.read_text()))).real == pytest.approx(1)


def test_verify_command(tmp_path):
    report = tmp_path / "r.json"
    code = run_cli(["verify", "--dims", "2,3", "--n-max", "5", "--k-max", "3", "--seeds", "10", "--report", str(report)])
    assert code == 0
    data = json.loads(report.read_text())
    # n in 2..5, k in 1..min(3, n-1): 1 + 2 + 3 + 3 = 9 cells per d and sector
    assert data["summary"]["total"] == len(data["cases"]) == 2 * 9 * 2 * 10
    assert data["summary"]["failed"] == 0


def test_verify_failure_exit_code(tmp_path):
    # d=3, n=8 exceeds the brute-force cap: recorded as a failure, nonzero exit
    assert run_cli(["verify", "--dims", "3", "--n-max", "8", "--k-max", "1", "--seeds", "1"]) == 1


def test_sweep_command(tmp_path):
    cfg = write_config(tmp_path)
    csv_a, csv_b, js = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "a.json"
    assert run_cli(["sweep", "--config", str(cfg), "--out-csv", str(csv_a), "--out-json", str(js), "--deterministic"]) == 0
    assert run_cli(["sweep", "--config", str(cfg), "--out-csv", str(csv_b), "--deterministic"]) == 0
    assert csv_a.read_bytes() == csv_b.read_bytes()
    assert len(json.loads(js.read_text())) == 2
    assert not list(tmp_path.glob(".*.tmp"))


def test_exit_codes(diag2, tmp_path, capsys):
    assert run_cli(["frobnicate"]) == 2
    assert run_cli(["xi", "--state", str(diag2), "--sector", "fermi"]) == 2
    assert run_cli(["contract", "--state", str(diag2), "--n", "2", "--k", "1", "--sector", "anyon"]) == 2
    assert run_cli(["xi", "--state", str(tmp_path / "missing.json"), "--N", "2", "--sector", "bose"]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(["xi", "--state", str(bad), "--N", "2", "--sector", "bose"]) == 3
    capsys.readouterr()
    assert run_cli(["contract", "--state", str(diag2), "--n", "3", "--k", "1", "--sector", "fermi", "--normalized"]) == 1
    assert "DegenerateState" in capsys.readouterr().err
    assert run_cli(["sweep", "--config", str(write_config(tmp_path, volumes=[40, 20])), "--out-csv",
                    str(tmp_path / "x.csv")]) == 2
    neg = tmp_path / "neg.json"
    neg.write_text(json.dumps({"eigenvalues": [1.0, -0.5]}))
    assert run_cli(["xi", "--state", str(neg), "--N", "2", "--sector", "bose"]) == 1
    assert run_cli(["sweep", "--config", str(write_config(tmp_path)), "--out-csv",
                    str(tmp_path / "no" / "dir" / "x.csv")]) == 3


def test_threads_env_usage_error(tmp_path, monkeypatch):
    monkeypatch.setenv("RDMKIT_THREADS", "many")
    assert run_cli(["sweep", "--config", str(write_config(tmp_path)), "--out-csv", str(tmp_path / "x.csv")]) == 2


def test_module_entry_point(diag2):
    proc = subprocess.run([sys.executable, "-m", "rdmkit", "xi", "--state", str(diag2), "--N", "2", "--sector", "bose"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout.split("xi:")[0])["xi"][2] == pytest.approx(0.75)


def test_matrix_json_roundtrip(tmp_path, rng):
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    raw = io.matrix_to_dict(m)
    assert set(raw) == {"dim", "re", "im"}
    np.testing.assert_array_equal(io.matrix_from_dict(json.loads(json.dumps(raw))), m)
    with pytest.raises(Exception):
        io.matrix_from_dict({"dim": 2, "re": [[1]], "im": [[0]]})
