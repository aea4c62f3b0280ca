import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reqisc.hamiltonian import (
    canonical_hamiltonian, load_coupling, normal_form, pauli_decompose, pauli_matrix, pauli_sum,
    preset, random_coupling, resolve_coupling, su2_from_rotation,
)
from reqisc.numerics import PAULIS, ContractError


def test_xy_preset_normal_form():
    nf = normal_form(preset("xy"))
    assert np.allclose(nf.coefficients, (0.5, 0.5, 0.0))
    assert np.isclose(nf.strength, 1.0)


def test_xx_preset_normal_form():
    nf = normal_form(preset("xx", g=2.0))
    assert np.allclose(nf.coefficients, (2.0, 0.0, 0.0))


def test_pauli_decompose_known_table():
    t = pauli_decompose(0.3 * pauli_matrix("XZ") - 0.7 * pauli_matrix("IY"))
    expected = np.zeros((4, 4))
    expected[1, 3] = 0.3
    expected[0, 2] = -0.7
    assert np.allclose(t, expected)


def test_pauli_decompose_rejects_non_hermitian():
    with pytest.raises(ContractError):
        pauli_decompose(np.triu(np.ones((4, 4))))


def test_local_only_coupling_rejected():
    with pytest.raises(ContractError):
        normal_form(pauli_matrix("XI") + pauli_matrix("IZ"))


@given(st.integers(0, 10_000))
def test_normal_form_reconstructs(seed):
    h = random_coupling(seed)
    nf = normal_form(h)
    assert np.max(np.abs(nf.reconstruct() - h)) < 1e-10
    assert nf.a >= nf.b - 1e-12 and nf.b >= abs(nf.c) - 1e-12
    assert np.allclose(pauli_decompose(h), pauli_decompose(pauli_sum(pauli_decompose(h))))


def test_normal_form_invariant_under_local_frames(rng):
    from reqisc.weyl import random_unitaries
    h = random_coupling(rng, local=False)
    a, b = random_unitaries(rng, 2, 2)
    v = np.kron(a, b)
    assert np.allclose(normal_form(v @ h @ v.conj().T).coefficients, normal_form(h).coefficients)


def test_su2_lift_conjugation(rng):
    from scipy.spatial.transform import Rotation
    r = Rotation.random(random_state=1).as_matrix()
    u = su2_from_rotation(r)
    for k in range(3):
        lhs = u @ PAULIS[k + 1] @ u.conj().T
        rhs = sum(r[i, k] * PAULIS[i + 1] for i in range(3))
        assert np.allclose(lhs, rhs)
    assert np.isclose(np.linalg.det(u), 1)


def test_canonical_hamiltonian():
    assert np.allclose(canonical_hamiltonian(1, 0, 0), pauli_matrix("XX"))


def test_load_coupling_pauli_scaled_by_g(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"pauli": {"XX": 0.5, "YY": 0.5}, "g": 2.0}))
    h = resolve_coupling(f"file:{p}")
    assert np.allclose(h, preset("xy", g=2.0))


def test_load_coupling_matrix_form():
    h = preset("xx")
    doc = {"matrix": np.stack([h.real, h.imag], axis=-1).tolist()}
    assert np.allclose(load_coupling(doc), h)


@pytest.mark.parametrize("doc", [{"pauli": {"XQ": 1}}, {"nothing": 1},
                                 {"matrix": [[[0, 0]] * 4] * 3}])
def test_load_coupling_rejects_bad_docs(doc):
    with pytest.raises(ValueError):
        load_coupling(doc)


def test_unknown_preset():
    with pytest.raises(ValueError):
        preset("zz")
