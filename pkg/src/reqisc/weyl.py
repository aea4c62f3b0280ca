"""Canonical (KAK) decomposition of two-qubit gates and Weyl-chamber arithmetic.

Conventions: ``Can(x, y, z) = exp(-i (x XX + y YY + z ZZ))``. The Weyl chamber is
``pi/4 >= x >= y >= |z|`` with ``z >= 0`` whenever ``x == pi/4``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import (
    I2, MAGIC, MAGIC_DAG, PX, PY, PZ, XX, YY, ZZ,
    ContractError, is_unitary, sym_unitary_eig,
)

CHAMBER_TOL = 1e-9
EDGE_TOL = 1e-10
QUARTER = np.pi / 4
HALF = np.pi / 2

# Diagonal of each of XX, YY, ZZ in the magic basis (mutually orthogonal +-1 vectors).
_DIAG = np.array([np.real(np.diag(MAGIC_DAG @ p @ MAGIC)) for p in (XX, YY, ZZ)])

_S = np.diag([1, 1j])
_RX90 = np.cos(np.pi / 4) * I2 - 1j * np.sin(np.pi / 4) * PX
_RY90 = np.cos(np.pi / 4) * I2 - 1j * np.sin(np.pi / 4) * PY
_AXIS_PAULI = (PX, PY, PZ)
# local R with (R x R) Can(c) (R x R)^dag == Can(c with axes i, j exchanged)
_AXIS_SWAPPER = {(0, 1): _S, (1, 2): _RX90, (0, 2): _RY90}


class WeylCoordinate(NamedTuple):
    """Nonlocal class ``(x, y, z)`` of a two-qubit gate, in radians."""

    x: float
    y: float
    z: float

    def in_chamber(self, tol: float = CHAMBER_TOL) -> bool:
        x, y, z = self
        ok = QUARTER + tol >= x and x + tol >= y and y + tol >= abs(z)
        # the z >= 0 rule binds only on the face itself, with the reduction's edge band
        if ok and x >= QUARTER - EDGE_TOL:
            ok = z >= -tol
        return bool(ok)

    def l1(self) -> float:
        return abs(self.x) + abs(self.y) + abs(self.z)


@dataclass
class LocalDecomposition:
    """``U == phase * kron(v1, v2) @ can(coordinate) @ kron(v3, v4)``."""

    coordinate: WeylCoordinate
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    v4: np.ndarray
    phase: complex

    def reconstruct(self) -> np.ndarray:
        return self.phase * np.kron(self.v1, self.v2) @ can(*self.coordinate) @ np.kron(self.v3, self.v4)


def can(x: float, y: float, z: float) -> np.ndarray:
    """Canonical gate matrix ``exp(-i (x XX + y YY + z ZZ))``."""
    # XX, YY, ZZ commute and are diagonal in the magic basis
    d = np.exp(-1j * (x * _DIAG[0] + y * _DIAG[1] + z * _DIAG[2]))
    return (MAGIC * d) @ MAGIC_DAG


class _Frame:
    """Tracks ``phase * (a1 x a2) Can(c) (b1 x b2)`` through Weyl-group moves."""

    def __init__(self, c, a1=I2, a2=I2, b1=I2, b2=I2, phase=1.0 + 0j):
        self.c = [float(v) for v in c]
        self.a1, self.a2, self.b1, self.b2 = a1, a2, b1, b2
        self.phase = complex(phase)

    def shift(self, k: int, n: int) -> None:
        # Can(c) = Can(c - n*pi/2 e_k) (-i P_k x P_k)^n
        if n == 0:
            return
        self.c[k] -= n * HALF
        p = np.linalg.matrix_power(_AXIS_PAULI[k], n % 2)
        self.b1 = p @ self.b1
        self.b2 = p @ self.b2
        self.phase *= (-1j) ** (n % 4)

    def swap(self, i: int, j: int) -> None:
        i, j = min(i, j), max(i, j)
        r = _AXIS_SWAPPER[(i, j)]
        self.c[i], self.c[j] = self.c[j], self.c[i]
        rd = r.conj().T
        self.a1 = self.a1 @ rd
        self.a2 = self.a2 @ rd
        self.b1 = r @ self.b1
        self.b2 = r @ self.b2

    def flip(self, i: int, j: int) -> None:
        k = 3 - i - j
        p = _AXIS_PAULI[k]
        self.c[i], self.c[j] = -self.c[i], -self.c[j]
        self.a1 = self.a1 @ p
        self.b1 = p @ self.b1

    def reduce(self) -> None:
        for k in range(3):
            n = int(np.round(self.c[k] / HALF))
            self.shift(k, n)
            if self.c[k] <= -QUARTER + EDGE_TOL:
                self.shift(k, -1)
        # sort by absolute value, descending
        for i, j in ((0, 1), (1, 2), (0, 1)):
            if abs(self.c[i]) < abs(self.c[j]):
                self.swap(i, j)
        if self.c[0] < 0:
            self.flip(0, 2)
        if self.c[1] < 0:
            self.flip(1, 2)
        if self.c[0] >= QUARTER - EDGE_TOL and self.c[2] < 0:
            # (x, y, z) ~ (pi/2 - x, y, -z)
            self.flip(0, 2)
            self.shift(0, -1)


def canonicalize_coordinate(raw) -> WeylCoordinate:
    """Reduce any ``(x, y, z)`` to the chamber point of the locally equivalent class."""
    frame = _Frame(raw)
    frame.reduce()
    return WeylCoordinate(*(float(v) + 0.0 for v in frame.c))


def canonicalize_many(raw: np.ndarray) -> np.ndarray:
    """Vectorized :func:`canonicalize_coordinate` over an ``(n, 3)`` array."""
    c = np.array(raw, dtype=float, copy=True).reshape(-1, 3)
    c -= HALF * np.round(c / HALF)
    c = np.where(c <= -QUARTER + EDGE_TOL, c + HALF, c)
    order = np.argsort(-np.abs(c), axis=1, kind="stable")
    c = np.take_along_axis(c, order, axis=1)
    neg = c[:, 0] < 0
    c[neg, 0] *= -1
    c[neg, 2] *= -1
    neg = c[:, 1] < 0
    c[neg, 1] *= -1
    c[neg, 2] *= -1
    edge = (c[:, 0] >= QUARTER - EDGE_TOL) & (c[:, 2] < 0)
    c[edge, 0] = HALF - c[edge, 0]
    c[edge, 2] *= -1
    return c + 0.0  # no signed zeros


def _split_kron(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, complex]:
    """Factor ``m == phase * kron(a, b)`` with ``a, b`` in SU(2)."""
    r = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = np.sqrt(s[0]) * vh[0].reshape(2, 2)
    da = np.sqrt(np.linalg.det(a))
    db = np.sqrt(np.linalg.det(b))
    return a / da, b / db, complex(da * db)


def _spectral_angles(up: np.ndarray) -> np.ndarray:
    """Half-angles of the spectrum of ``up.T @ up``, with a zero-sum branch."""
    ev = np.linalg.eigvals(np.swapaxes(up, -1, -2) @ up)
    theta = np.angle(ev) / 2
    total = np.round(theta.sum(axis=-1) / np.pi)
    odd = (np.abs(total) % 2) == 1
    theta[..., 0] = np.where(odd, theta[..., 0] + np.pi, theta[..., 0])
    return theta


def _su(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    det = np.linalg.det(u)
    root = det ** 0.25
    return u / root[..., None, None], root


def weyl_coordinates(u: np.ndarray) -> np.ndarray:
    """Chamber coordinates of one 4x4 unitary or a stack ``(n, 4, 4)``.

    Uses only the spectrum of the magic-basis symmetrization, so it is much
    cheaper than :func:`canonical_decompose`.
    """
    u = np.asarray(u, dtype=complex)
    single = u.ndim == 2
    u = u.reshape(-1, 4, 4)
    su, _ = _su(u)
    up = MAGIC_DAG @ su @ MAGIC
    theta = _spectral_angles(up)
    raw = -(theta @ _DIAG.T) / 4
    out = canonicalize_many(raw)
    return out[0] if single else out


def canonical_decompose(u: np.ndarray, tol: float = 1e-10) -> LocalDecomposition:
    """KAK decomposition ``u = phase (v1 x v2) Can(x, y, z) (v3 x v4)``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4) or not is_unitary(u, tol):
        raise ContractError("canonical_decompose requires a 4x4 unitary")
    su, root = _su(u)
    up = MAGIC_DAG @ su @ MAGIC
    sym = up.T @ up
    sym = 0.5 * (sym + sym.T)
    o, d = sym_unitary_eig(sym, tol=1e-8)
    theta = np.angle(d) / 2
    if int(np.round(theta.sum() / np.pi)) % 2:
        theta[0] += np.pi
    k1 = (up @ o * np.exp(-1j * theta)).real
    k2 = o.T
    raw = -(_DIAG @ theta) / 4
    phi = theta.sum() / 4
    a1, a2, pa = _split_kron(MAGIC @ k1 @ MAGIC_DAG)
    b1, b2, pb = _split_kron(MAGIC @ k2 @ MAGIC_DAG)
    frame = _Frame(raw, a1, a2, b1, b2, complex(root) * np.exp(1j * phi) * pa * pb)
    frame.reduce()
    return LocalDecomposition(WeylCoordinate(*(float(v) + 0.0 for v in frame.c)), frame.a1, frame.a2,
                              frame.b1, frame.b2, frame.phase)


def coordinate_of(u: np.ndarray) -> WeylCoordinate:
    return WeylCoordinate(*weyl_coordinates(u))


def mirror(c) -> WeylCoordinate:
    """Chamber coordinate of ``SWAP @ Can(c)``."""
    x, y, z = c
    if z >= 0:
        raw = (QUARTER - z, QUARTER - y, x - QUARTER)
    else:
        raw = (QUARTER + z, QUARTER - y, QUARTER - x)
    return canonicalize_coordinate(raw)


def coordinate_distance(c1, c2) -> float:
    """Max-norm distance between chamber points, aware of the x = pi/4 face identification."""
    a = np.asarray(c1, dtype=float)
    b = np.asarray(c2, dtype=float)
    d = np.max(np.abs(a - b))
    # (pi/4, y, z) ~ (pi/4, y, -z) on the boundary face
    if abs(a[0] - QUARTER) < 1e-6 or abs(b[0] - QUARTER) < 1e-6:
        d = min(d, np.max(np.abs(a - b * np.array([1, 1, -1]))))
    return float(d)


def local_equivalent(u: np.ndarray, v: np.ndarray, tol: float = 1e-8) -> bool:
    return coordinate_distance(weyl_coordinates(u), weyl_coordinates(v)) < tol


def is_near_identity(c, r: float) -> bool:
    x, y, z = c
    return abs(x) + abs(y) + abs(z) < r


def random_su4(rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Haar-random element of SU(4)."""
    return random_unitaries(rng, 1, 4)[0]


def random_unitaries(rng, n: int, dim: int = 4) -> np.ndarray:
    """``n`` Haar-random ``dim x dim`` special unitaries, shape ``(n, dim, dim)``."""
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[:, None, :]
    det = np.linalg.det(q)
    return q / (det ** (1.0 / dim))[:, None, None]
