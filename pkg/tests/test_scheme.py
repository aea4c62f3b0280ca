import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reqisc.hamiltonian import normal_form, preset, random_coupling
from reqisc.scheme import (
    EA_MINUS, EA_PLUS, ND, AmplitudeExceeded, family_sweep, frontier_contains, optimal_time,
    optimal_time_many, synthesize_pulse, verify_solution,
)
from reqisc.weyl import QUARTER, can, coordinate_of, random_su4, random_unitaries

XY = (0.5, 0.5, 0.0)
XX = (1.0, 0.0, 0.0)


@pytest.mark.parametrize("c,abc,tau", [
    ((QUARTER, 0, 0), XY, np.pi / 2),
    ((QUARTER, QUARTER / 2, 0), XX, 3 * np.pi / 8),
    ((np.pi / 8, np.pi / 8, 0), XY, np.pi / 4),
    ((QUARTER, QUARTER, 0), XX, np.pi / 2),
    ((QUARTER, 0, 0), XX, np.pi / 4),
])
def test_fixed_optimal_times(c, abc, tau):
    assert abs(optimal_time(c, abc)[0] - tau) < 1e-12


def test_optimal_time_many_matches_scalar(rng):
    coords = np.array([coordinate_of(u) for u in random_unitaries(rng, 50)])
    abc = normal_form(random_coupling(3)).coefficients
    many = optimal_time_many(coords, abc)
    assert np.allclose(many, [optimal_time(c, abc)[0] for c in coords])


def test_scaling_coupling_scales_time(rng):
    u = random_su4(rng)
    t1 = synthesize_pulse(u, preset("xy", 1.0)).tau
    t3 = synthesize_pulse(u, preset("xy", 3.0)).tau
    assert abs(t1 / t3 - 3.0) < 1e-12


@given(st.integers(0, 10_000), st.integers(0, 2))
def test_pulse_reconstruction(seed, which):
    h = [preset("xy"), preset("xx"), random_coupling(seed + 1)][which]
    u = random_su4(seed)
    sol = synthesize_pulse(u, h)
    assert verify_solution(sol, u, h) < 1e-8
    assert min(abs(sol.omega1), abs(sol.omega2), abs(sol.delta)) < 1e-12
    assert sol.tau >= 0


def test_identity_target():
    sol = synthesize_pulse(np.eye(4), preset("xy"))
    assert sol.tau == 0 and verify_solution(sol, np.eye(4), preset("xy")) < 1e-12


def test_all_subschemes_reached():
    seen = set()
    h = preset("xy")
    for u in random_unitaries(7, 60):
        seen.add(synthesize_pulse(u, h).subscheme)
    assert seen == {ND, EA_PLUS, EA_MINUS}


def test_frontier_membership():
    h = preset("xy")
    abc = normal_form(h).coefficients
    for u in random_unitaries(11, 40):
        sol = synthesize_pulse(u, h)
        c = coordinate_of(u)
        if sol.reflected:
            c = (np.pi / 2 - c[0], c[1], -c[2])
        assert frontier_contains(c, abc, sol.tau, sol.subscheme, tol=1e-8)


def test_tau_perturbation_sensitivity():
    h = preset("xy")
    u = random_su4(2)
    sol = synthesize_pulse(u, h)
    r1 = verify_solution(dataclasses.replace(sol, tau=sol.tau + 1e-3), u, h)
    r2 = verify_solution(dataclasses.replace(sol, tau=sol.tau + 2e-3), u, h)
    # the trace infidelity is second order in the timing error
    assert r1 > 1e-7 and 3.0 < r2 / r1 < 5.0
    # first-order operator distance, minimized over global phase
    v = dataclasses.replace(sol, tau=sol.tau + 1e-3).gate(h)
    ph = np.trace(u.conj().T @ v)
    assert np.linalg.norm(v - ph / abs(ph) * u, 2) > 1e-5


def test_amplitude_limit():
    h = preset("xy")
    u = random_su4(5)
    sol = synthesize_pulse(u, h)
    with pytest.raises(AmplitudeExceeded) as err:
        synthesize_pulse(u, h, amp_max=sol.max_amplitude / 2)
    assert err.value.solution.tau == sol.tau
    assert sol.a1_amp == -2 * (sol.omega1 + sol.omega2)


def test_family_sweep_rows():
    rows = family_sweep("cnot", [0.0, 0.5, 1.0], preset("xy"))
    assert len(rows) == 3 and all(len(r) == 5 for r in rows)
    assert abs(rows[-1][4] - np.pi / 2) < 1e-9
    assert abs(rows[0][4]) < 1e-12


def test_can_family_targets_verify():
    h = preset("xx")
    for c in [(0.3, 0.2, -0.1), (QUARTER, 0.1, 0.05), (0.6, 0.5, 0.5)]:
        u = can(*c)
        assert verify_solution(synthesize_pulse(u, h), u, h) < 1e-8
