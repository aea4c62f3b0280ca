import csv
import io
import math

import numpy as np
import pytest

from reqisc.bench import (
    BASIS_GATES, ErrorProxyConfig, basis_gate_table, basis_table_notes, durations_and_schemes,
    error_proxy, haar_duration_stats, random_normal_form, report, sweep_csv, thread_count,
)
from reqisc.circuit import CNOT_TAU, Circuit, Gate, can_gate
from reqisc.hamiltonian import normal_form, preset
from reqisc.numerics import ContractError
from reqisc.scheme import optimal_time, synthesize_pulse
from reqisc.weyl import random_unitaries, weyl_coordinates


def test_vectorized_durations_match_solver():
    nf = normal_form(preset("xy"))
    us = random_unitaries(3, 40)
    tau, scheme = durations_and_schemes(weyl_coordinates(us), nf.coefficients)
    names = ["ND", "EA_plus", "EA_minus"]
    for u, t, s in zip(us, tau, scheme):
        sol = synthesize_pulse(u, nf)
        assert abs(sol.tau - t) < 1e-12
        assert sol.subscheme == names[s]


def test_stats_reproducible_and_thread_invariant():
    nf = normal_form(preset("xx"))
    a = haar_duration_stats(nf, 25_000, seed=5, threads=1)
    b = haar_duration_stats(nf, 25_000, seed=5, threads=3)
    assert a == b
    assert abs(sum(a.subscheme_shares.values()) - 1) < 1e-12
    assert a.p95_tau >= a.mean_tau


def test_thread_env(monkeypatch):
    monkeypatch.setenv("REQISC_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("REQISC_THREADS", "junk")
    assert thread_count() == 1


def test_stats_rejects_empty():
    with pytest.raises(ContractError):
        haar_duration_stats(normal_form(preset("xy")), 0)


@pytest.mark.parametrize("name,xy,xx", [
    ("CNOT", 1.571, 0.785), ("iSWAP", 1.571, 1.571), ("SQiSW", 0.785, 0.785), ("B", 1.571, 1.178),
])
def test_basis_table_singles(name, xy, xx):
    assert abs(basis_gate_table(preset("xy"))[name]["single"] - xy) < 1e-3
    assert abs(basis_gate_table(preset("xx"))[name]["single"] - xx) < 1e-3


def test_basis_table_b_note():
    rows = basis_gate_table(preset("xy"))
    notes = basis_table_notes(rows, "xy")
    assert len(notes) == 1 and "4.712" in notes[0]
    assert basis_table_notes(basis_gate_table(preset("xx")), "xx") == []


def test_random_normal_form_dists():
    for d in ("normal", "uniform"):
        nf = random_normal_form(1, d)
        assert nf.a >= nf.b >= abs(nf.c)
    with pytest.raises(ContractError):
        random_normal_form(1, "cauchy")


def test_error_proxy_cnot_chain():
    c = Circuit(2, [Gate("cx", (0, 1))] * 10)
    out = error_proxy(c)
    assert abs(out["est_fidelity"] - (1 - 1e-3) ** 10) < 1e-15
    assert abs(out["duration"] - 10 * CNOT_TAU) < 1e-12


def test_error_proxy_scales_with_duration():
    nf = normal_form(preset("xy"))
    g = can_gate(BASIS_GATES["SQiSW"], 0, 1)
    out = error_proxy(Circuit(2, [g]), nf, ErrorProxyConfig(p0=0.01, tau0=1.0))
    tau = optimal_time(BASIS_GATES["SQiSW"], nf.coefficients)[0]
    assert abs(out["est_error"] - 0.01 * tau) < 1e-15
    with pytest.raises(ContractError):
        ErrorProxyConfig(p0=1.5)


def test_report_schema():
    doc = report("x", {"a": 1}, {"b": 2}, {"count2q": 3}, extra=True)
    assert doc["schema_version"] == 1 and doc["kind"] == "x" and doc["extra"]


def test_sweep_csv_header_and_zero():
    text = sweep_csv([(0.0, -0.0, 1.0, 0.0, math.pi)])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["s", "A1", "A2", "delta", "tau"]
    assert rows[1][1] == "0.0"
