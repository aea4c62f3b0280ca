import numpy as np
import pytest
from hypothesis import given, strategies as st

from reqisc.numerics import ContractError
from reqisc.weyl import (
    QUARTER, WeylCoordinate, can, canonical_decompose, canonicalize_coordinate, coordinate_distance,
    coordinate_of, is_near_identity, local_equivalent, mirror, random_su4, random_unitaries,
    weyl_coordinates,
)

CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
ISWAP = np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex)
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)

chamber_points = st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(-1, 1)).map(
    lambda t: (QUARTER * t[0], QUARTER * t[0] * t[1], QUARTER * t[0] * t[1] * t[2]))


def pauli_exp_oracle(x, y, z):
    # independent construction via scipy's general matrix exponential
    from scipy.linalg import expm
    px = np.array([[0, 1], [1, 0]])
    py = np.array([[0, -1j], [1j, 0]])
    pz = np.diag([1, -1])
    gen = x * np.kron(px, px) + y * np.kron(py, py) + z * np.kron(pz, pz)
    return expm(-1j * gen)


@given(chamber_points)
def test_can_matches_expm(c):
    assert np.max(np.abs(can(*c) - pauli_exp_oracle(*c))) < 1e-12


@pytest.mark.parametrize("u,expected", [
    (CX, (QUARTER, 0, 0)),
    (CZ, (QUARTER, 0, 0)),
    (SWAP, (QUARTER, QUARTER, QUARTER)),
    (ISWAP, (QUARTER, QUARTER, 0)),
    (np.eye(4), (0, 0, 0)),
])
def test_known_gate_coordinates(u, expected):
    assert coordinate_distance(coordinate_of(u), expected) < 1e-9
    dec = canonical_decompose(u)
    assert coordinate_distance(dec.coordinate, expected) < 1e-9
    assert np.max(np.abs(dec.reconstruct() - u)) < 1e-9


def test_sqisw_coordinate():
    assert coordinate_distance(coordinate_of(can(np.pi / 8, np.pi / 8, 0)), (np.pi / 8, np.pi / 8, 0)) < 1e-12


def test_kak_round_trip_haar(rng):
    for u in random_unitaries(rng, 300):
        d = canonical_decompose(u)
        assert d.coordinate.in_chamber()
        assert np.max(np.abs(d.reconstruct() - u)) < 1e-9
        assert coordinate_distance(d.coordinate, weyl_coordinates(u)) < 1e-9


def test_local_invariance(rng):
    u = random_su4(rng)
    a, b, c, d = (random_unitaries(rng, 1, 2)[0] for _ in range(4))
    v = np.kron(a, b) @ u @ np.kron(c, d)
    assert local_equivalent(u, v)
    assert not local_equivalent(u, CX)


def test_batched_coordinates_match_single(rng):
    us = random_unitaries(rng, 20)
    batch = weyl_coordinates(us)
    assert batch.shape == (20, 3)
    for u, row in zip(us, batch):
        assert np.allclose(weyl_coordinates(u), row)


def test_rejects_non_unitary():
    with pytest.raises(ContractError):
        canonical_decompose(np.ones((4, 4)))


@given(chamber_points)
def test_mirror_law_matches_swap_product(c):
    via_matrix = coordinate_of(SWAP @ can(*c))
    assert coordinate_distance(mirror(c), via_matrix) < 1e-8


@given(chamber_points)
def test_mirror_involution(c):
    assert coordinate_distance(mirror(mirror(c)), canonicalize_coordinate(c)) < 1e-10


def test_mirror_of_known_points():
    assert coordinate_distance(mirror((0, 0, 0)), (QUARTER, QUARTER, QUARTER)) < 1e-12
    assert coordinate_distance(mirror((QUARTER, 0, 0)), (QUARTER, QUARTER, 0)) < 1e-12


@given(st.tuples(*[st.floats(-4, 4)] * 3))
def test_canonicalize_lands_in_chamber(raw):
    c = canonicalize_coordinate(raw)
    assert c.in_chamber()
    assert local_equivalent(can(*raw), can(*c))


def test_in_chamber_face_rule():
    assert WeylCoordinate(QUARTER, 0.1, 0.05).in_chamber()
    assert not WeylCoordinate(QUARTER, 0.1, -0.05).in_chamber()
    assert WeylCoordinate(0.5, 0.1, -0.05).in_chamber()
    assert not WeylCoordinate(0.1, 0.2, 0.0).in_chamber()


def test_in_chamber_edge_band_regression():
    # x sits just below pi/4 (outside the reduction's edge band) with tiny negative z
    assert WeylCoordinate(0.785398163211426, 0.785398163211426, -3.16e-9).in_chamber()


def test_swap_cx_product_regression():
    # degenerate Jacobi rotation once produced NaN here
    u = SWAP @ CX
    d = canonical_decompose(u)
    assert np.all(np.isfinite(d.coordinate))
    assert np.max(np.abs(d.reconstruct() - u)) < 1e-9
    assert coordinate_distance(d.coordinate, (QUARTER, QUARTER, 0)) < 1e-9


def test_local_gate_coordinates():
    assert coordinate_distance(coordinate_of(np.kron(H, H)), (0, 0, 0)) < 1e-12


def test_near_identity_and_distance_face():
    assert is_near_identity((0.05, 0.04, 0.01), 0.15)
    assert not is_near_identity((0.1, 0.04, 0.01), 0.15)
    assert coordinate_distance((QUARTER, 0.2, 0.1), (QUARTER, 0.2, -0.1)) < 1e-12
