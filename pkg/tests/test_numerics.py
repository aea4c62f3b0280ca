import numpy as np
import pytest
from hypothesis import given, strategies as st

from reqisc.numerics import (
    I2, MAGIC, MAGIC_DAG, PZ, ContractError, expm_hermitian, is_unitary, joint_diagonalize,
    solve_root_2d, sym_unitary_eig,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def taylor_expm(h, t, terms=30):
    # independent oracle: truncated series of exp(-i h t)
    out = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ (-1j * t * h) / k
        out = out + term
    return out


def test_expm_zero_generator():
    assert np.allclose(expm_hermitian(np.zeros((4, 4)), 3.7), np.eye(4))


def test_expm_pauli_z():
    got = expm_hermitian(PZ, np.pi / 2)
    assert np.allclose(got, np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]), atol=1e-14)


def test_expm_matches_taylor_oracle(rng):
    h = random_hermitian(rng, 4)
    assert np.max(np.abs(expm_hermitian(h, 0.3) - taylor_expm(h, 0.3))) < 1e-10


def test_expm_rejects_non_hermitian():
    with pytest.raises(ContractError):
        expm_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 10_000))
def test_expm_group_law(t1, t2, seed):
    h = random_hermitian(np.random.default_rng(seed), 4)
    lhs = expm_hermitian(h, t1) @ expm_hermitian(h, t2)
    assert np.max(np.abs(lhs - expm_hermitian(h, t1 + t2))) < 1e-9
    assert is_unitary(expm_hermitian(h, t1))


def test_sym_unitary_eig_identity():
    o, d = sym_unitary_eig(np.eye(4))
    assert np.allclose(o @ np.diag(d) @ o.T, np.eye(4))
    assert np.allclose(d, 1)


def test_sym_unitary_eig_diagonal():
    s = np.diag([1, -1, 1j, -1j])
    o, d = sym_unitary_eig(s)
    assert np.allclose(np.abs(o), np.eye(4))
    assert np.allclose(o @ np.diag(d) @ o.T, s, atol=1e-12)
    assert np.isclose(np.linalg.det(o), 1)


def test_sym_unitary_eig_clifford_target():
    # symmetrized magic-basis image of CZ (Y x Y); Clifford spectra are degenerate
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    y = np.array([[0, -1j], [1j, 0]])
    up = MAGIC_DAG @ (cz @ np.kron(y, y)) @ MAGIC
    s = up.T @ up
    o, d = sym_unitary_eig(s)
    assert np.max(np.abs(o @ np.diag(d) @ o.T - s)) < 1e-9
    assert np.isclose(np.linalg.det(o), 1)


def test_sym_unitary_eig_rejects_asymmetric():
    with pytest.raises(ContractError):
        sym_unitary_eig(np.array([[0, 1], [-1, 0]], dtype=complex))


def test_sym_unitary_eig_random_reconstruction(rng):
    from scipy.stats import special_ortho_group
    for _ in range(1000):
        o = special_ortho_group.rvs(4, random_state=rng)
        d = np.exp(1j * rng.uniform(-np.pi, np.pi, 4))
        s = o.T @ np.diag(d) @ o
        o2, d2 = sym_unitary_eig(s)
        assert np.max(np.abs(o2 @ np.diag(d2) @ o2.T - s)) < 1e-9


def test_joint_diagonalize_degenerate_pair():
    # real part with a doubly degenerate off-diagonal structure; regression for a 0/0 angle
    a = np.array([[0, 0, -1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
    o = joint_diagonalize([a, np.zeros((4, 4))])
    m = o.T @ a @ o
    assert np.max(np.abs(m - np.diag(np.diag(m)))) < 1e-12


def test_solve_root_identity_map():
    p, res = solve_root_2d(lambda p: p, [-1, -1], [1, 1])
    assert p is not None and np.allclose(p, 0, atol=1e-10) and res < 1e-10


def test_solve_root_affine():
    p, res = solve_root_2d(lambda p: np.array([p[0] - 0.25, p[1] - 0.5]), [-1, -1], [1, 1])
    assert np.allclose(p, [0.25, 0.5], atol=1e-10)


def test_solve_root_reports_failure():
    p, res = solve_root_2d(lambda p: np.array([p[0] ** 2 + 1.0, p[1]]), [-1, -1], [1, 1])
    assert p is None and res >= 1.0 - 1e-9


def test_solve_root_respects_constraints_and_preference():
    # roots on the unit circle; constraint x + y >= 1 and preference for the largest x
    f = lambda p: np.array([p[0] ** 2 + p[1] ** 2 - 1.0, 0.0])
    p, res = solve_root_2d(f, [0, 0], [1, 1], constraints=[((1, 1), 1.0)], prefer=lambda p: -p[0])
    assert p is not None and res < 1e-10
    assert p[0] + p[1] >= 1 - 1e-12 and 0 <= p[0] <= 1 and 0 <= p[1] <= 1


def test_magic_basis_is_unitary():
    assert is_unitary(MAGIC) and np.allclose(MAGIC @ MAGIC_DAG, np.eye(4))
    assert np.allclose(I2, np.eye(2))
