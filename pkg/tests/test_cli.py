import json
import subprocess
import sys

import pytest

from reqisc.circuit import Circuit, Gate, emit_qasm
from reqisc.cli import main


@pytest.fixture
def qasm_files(tmp_path):
    c = Circuit(3, [Gate("h", (0,)), Gate("cx", (0, 1)), Gate("cx", (1, 2)), Gate("cx", (0, 1)),
                    Gate("cx", (0, 2))])
    bad = Circuit(3, [Gate("h", (1,))])
    a, b = tmp_path / "a.qasm", tmp_path / "b.qasm"
    a.write_text(emit_qasm(c))
    b.write_text(emit_qasm(bad))
    return tmp_path, a, b


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


def test_pulse_cnot_xy(capsys):
    code, doc = run_json(capsys, ["pulse", "--gate", "cnot", "--coupling", "xy"])
    out = doc["outputs"]
    assert code == 0 and abs(out["tau"] - 1.5707963) < 1e-6
    assert out["residual"] < 1e-8
    assert len(out["corrections"]["a1"]) == 2


def test_pulse_amplitude_cap_fails(capsys):
    code, doc = run_json(capsys, ["pulse", "--gate", "can:0.3,0.2,0.1", "--amp-max", "1e-6"])
    assert code == 1 and doc["outputs"]["amplitude_exceeded"]


def test_compile_and_verify(capsys, qasm_files):
    d, a, b = qasm_files
    out = d / "out.qasm"
    lib = d / "lib.json"
    code, doc = run_json(capsys, ["compile", "--input", str(a), "--mode", "full", "--restarts", "2",
                                  "--emit", str(out), "--templates", str(lib)])
    assert code == 0 and doc["verification"]["passed"]
    assert doc["metrics"]["after"]["count2q"] <= doc["metrics"]["before"]["count2q"]
    code, doc = run_json(capsys, ["verify", "--input", str(out), "--reference", str(a)])
    assert code == 0 and doc["outputs"]["passed"]


def test_verify_failure_exit_code(capsys, qasm_files):
    _, a, b = qasm_files
    code, doc = run_json(capsys, ["verify", "--input", str(b), "--reference", str(a)])
    assert code == 1 and not doc["outputs"]["passed"]


def test_route(capsys, qasm_files):
    d, a, _ = qasm_files
    code, doc = run_json(capsys, ["route", "--input", str(a), "--topology", "chain:3", "--seed", "2"])
    assert code == 0 and doc["verification"]["passed"]
    assert doc["routing"]["count2q_after"] >= doc["routing"]["count2q_before"]


def test_bench_duration_small(capsys, monkeypatch):
    monkeypatch.setenv("REQISC_THREADS", "2")
    code, doc = run_json(capsys, ["bench", "duration", "--coupling", "xx", "--samples", "2000"])
    assert code == 0 and doc["outputs"]["stats"]["samples"] == 2000


def test_bench_sweep_csv(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code = main(["bench", "sweep", "--family", "iswap", "--points", "3", "--csv", str(path)])
    capsys.readouterr()
    assert code == 0 and path.read_text().splitlines()[0] == "s,A1,A2,delta,tau"


def test_errors_exit_two(capsys, tmp_path):
    assert main(["pulse", "--gate", "nonsense"]) == 2
    assert main(["route", "--input", str(tmp_path / "missing.qasm"), "--topology", "chain:3"]) == 2
    assert "error" in capsys.readouterr().err


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "reqisc.cli", "pulse", "--gate", "iswap", "--coupling", "xx"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "tau=1.570796" in res.stdout
