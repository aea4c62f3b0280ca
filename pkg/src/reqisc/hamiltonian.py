"""Normal form of two-qubit coupling Hamiltonians."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .numerics import PAULIS, ContractError, is_hermitian

PAULI_LABELS = "IXYZ"
NONLOCAL_TOL = 1e-12


@dataclass
class NormalForm:
    """``H = (u1 x u2)(a XX + b YY + c ZZ)(u1 x u2)^dag + h1_res x I + I x h2_res``."""

    a: float
    b: float
    c: float
    u1: np.ndarray
    u2: np.ndarray
    h1_res: np.ndarray
    h2_res: np.ndarray

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    @property
    def strength(self) -> float:
        """Coupling strength ``g = a + b + |c|``."""
        return self.a + self.b + abs(self.c)

    def canonical_matrix(self) -> np.ndarray:
        return canonical_hamiltonian(self.a, self.b, self.c)

    def reconstruct(self) -> np.ndarray:
        u = np.kron(self.u1, self.u2)
        return (u @ self.canonical_matrix() @ u.conj().T
                + np.kron(self.h1_res, np.eye(2)) + np.kron(np.eye(2), self.h2_res))


def canonical_hamiltonian(a: float, b: float, c: float) -> np.ndarray:
    return sum(k * np.kron(p, p) for k, p in zip((a, b, c), PAULIS[1:]))


def pauli_matrix(label: str) -> np.ndarray:
    return np.kron(PAULIS[PAULI_LABELS.index(label[0])], PAULIS[PAULI_LABELS.index(label[1])])


def pauli_decompose(h: np.ndarray) -> np.ndarray:
    """4x4 real table ``c[i, j] = Tr(H (s_i x s_j)) / 4`` over ``{I, X, Y, Z}``."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (4, 4) or not is_hermitian(h, 1e-12 * max(1.0, np.abs(h).max())):
        raise ContractError("pauli_decompose requires a 4x4 Hermitian matrix")
    table = np.empty((4, 4))
    for i, p in enumerate(PAULIS):
        for j, q in enumerate(PAULIS):
            table[i, j] = np.trace(h @ np.kron(p, q)).real / 4
    return table


def pauli_sum(table) -> np.ndarray:
    table = np.asarray(table, dtype=float)
    return sum(table[i, j] * np.kron(PAULIS[i], PAULIS[j]) for i in range(4) for j in range(4))


def su2_from_rotation(r: np.ndarray) -> np.ndarray:
    """Lift ``R`` in SO(3) to ``U`` in SU(2) with ``U s_k U^dag = sum_i R[i, k] s_i``.

    Of the two lifts the one with nonnegative trace is returned.
    """
    qx, qy, qz, qw = Rotation.from_matrix(r).as_quat()
    if qw < 0:
        qx, qy, qz, qw = -qx, -qy, -qz, -qw
    return qw * PAULIS[0] - 1j * (qx * PAULIS[1] + qy * PAULIS[2] + qz * PAULIS[3])


def normal_form(h: np.ndarray) -> NormalForm:
    """Canonical coefficients ``a >= b >= |c|``, frame rotations and local residuals of ``h``."""
    table = pauli_decompose(h)
    block = table[1:, 1:]
    if np.max(np.abs(block)) < NONLOCAL_TOL * max(1.0, np.abs(table).max()):
        raise ContractError("no entangling coupling: the two-body block vanishes")
    p, s, qt = np.linalg.svd(block)
    q = qt.T
    s = s.copy()
    if np.linalg.det(p) < 0:
        p[:, 2] *= -1
        s[2] *= -1
    if np.linalg.det(q) < 0:
        q[:, 2] *= -1
        s[2] *= -1
    u1 = su2_from_rotation(p)
    u2 = su2_from_rotation(q)
    h1 = sum(table[i, 0] * PAULIS[i] for i in range(1, 4))
    h2 = sum(table[0, j] * PAULIS[j] for j in range(1, 4))
    return NormalForm(float(s[0]), float(s[1]), float(s[2]), u1, u2,
                      np.asarray(h1, dtype=complex), np.asarray(h2, dtype=complex))


def preset(name: str, g: float = 1.0) -> np.ndarray:
    """Named couplings: ``xy`` is ``(g/2)(XX + YY)``, ``xx`` is ``g XX``."""
    name = name.lower()
    if name == "xy":
        return g / 2 * (pauli_matrix("XX") + pauli_matrix("YY"))
    if name == "xx":
        return g * pauli_matrix("XX")
    raise ValueError(f"unknown coupling preset {name!r}")


def random_coupling(rng, local: bool = True) -> np.ndarray:
    """Random Hermitian 4x4 coupling with standard-normal Pauli coefficients."""
    rng = np.random.default_rng(rng)
    table = rng.standard_normal((4, 4))
    table[0, 0] = 0.0
    if not local:
        table[0, :] = 0.0
        table[:, 0] = 0.0
    return pauli_sum(table)


def load_coupling(source: str | Path | dict) -> np.ndarray:
    """Read the JSON coupling format.

    ``{"pauli": {"XX": 0.5, "YY": 0.5}, "g": 1.0}`` or ``{"matrix": [[[re, im], ...], ...]}``.
    Coefficients are in units of ``g`` (default 1), i.e. the result is scaled by ``g``.
    """
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    g = float(doc.get("g", 1.0))
    if "pauli" in doc:
        h = np.zeros((4, 4), dtype=complex)
        for label, coeff in doc["pauli"].items():
            label = label.upper()
            if len(label) != 2 or any(ch not in PAULI_LABELS for ch in label):
                raise ValueError(f"bad Pauli label {label!r}")
            h += float(coeff) * pauli_matrix(label)
    elif "matrix" in doc:
        arr = np.asarray(doc["matrix"], dtype=float)
        if arr.shape != (4, 4, 2):
            raise ValueError("coupling matrix must be 4x4 of [re, im] pairs")
        h = arr[..., 0] + 1j * arr[..., 1]
        if not is_hermitian(h, 1e-9):
            raise ValueError("coupling matrix is not Hermitian")
    else:
        raise ValueError("coupling file needs a 'pauli' or 'matrix' entry")
    return g * h


def resolve_coupling(spec: str, g: float = 1.0) -> np.ndarray:
    """``xy`` / ``xx`` presets scaled by ``g``, or ``file:<path>`` (which carries its own ``g``)."""
    if spec.startswith("file:"):
        return load_coupling(spec[5:])
    return preset(spec, g)
