"""Time-optimal pulse parameters for arbitrary two-qubit gates under arbitrary couplings.

Given a target ``U`` and a coupling ``H`` the solver returns the interaction time
``tau``, drive parameters ``(omega1, omega2, delta)`` and four single-qubit
corrections such that::

    (A1 x A2) exp(-i tau (H + H1 x I + I x H2)) (B1 x B2) == U   (up to phase)

with ``H1 = (omega1 + omega2) X + delta Z`` and ``H2 = (omega1 - omega2) X + delta Z``
expressed in the normal-form frame of ``H``.
"""

from __future__ import annotations

import cmath

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .hamiltonian import NormalForm, canonical_hamiltonian, normal_form
from .numerics import I2, PX, PZ, ContractError, expm_hermitian, solve_root_2d
from .weyl import (
    HALF, LocalDecomposition, WeylCoordinate, can, canonical_decompose,
    canonicalize_coordinate, coordinate_distance,
)

ND, EA_PLUS, EA_MINUS = "ND", "EA_plus", "EA_minus"
TIE_TOL = 1e-12
COORD_MATCH_TOL = 1e-6
ROOT_TOL = 1e-10
SINC_BRANCHES = 64
_DENOM_TOL = 1e-12


class InfeasibleError(RuntimeError):
    """A sub-solver could not produce drive parameters."""

    def __init__(self, message: str, residual: float = np.nan):
        super().__init__(message)
        self.residual = residual


class InconsistencyError(RuntimeError):
    """The solved evolution does not have the target's Weyl coordinate."""


class AmplitudeExceeded(RuntimeError):
    """The solution needs drives above ``amp_max``; the solution is attached."""

    def __init__(self, solution: "PulseSolution", amp_max: float):
        super().__init__(f"drive amplitude {solution.max_amplitude:.4g} exceeds {amp_max:.4g}")
        self.solution = solution
        self.amp_max = amp_max


@dataclass
class NDRecord:
    s1: float
    s2: float


@dataclass
class EARecord:
    alpha: float
    beta: float
    eta: float
    t_scaled: float
    shifted_coord: tuple[float, float, float]
    residual: float = 0.0


@dataclass
class PulseSolution:
    subscheme: str
    tau: float
    omega1: float
    omega2: float
    delta: float
    corr_a1: np.ndarray
    corr_a2: np.ndarray
    corr_b1: np.ndarray
    corr_b2: np.ndarray
    reflected: bool
    coordinate: WeylCoordinate
    diagnostics: NDRecord | EARecord | None = None
    h1: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), complex))
    h2: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), complex))

    @property
    def a1_amp(self) -> float:
        return -2.0 * (self.omega1 + self.omega2) + 0.0

    @property
    def a2_amp(self) -> float:
        return -2.0 * (self.omega1 - self.omega2) + 0.0

    @property
    def max_amplitude(self) -> float:
        return max(abs(self.a1_amp), abs(self.a2_amp), abs(self.delta))

    def evolution(self, h: np.ndarray) -> np.ndarray:
        """``exp(-i tau (H + H1 x I + I x H2))`` in the lab frame of ``h``."""
        total = np.asarray(h, dtype=complex) + np.kron(self.h1, I2) + np.kron(I2, self.h2)
        return expm_hermitian(total, self.tau, tol=1e-9)

    def gate(self, h: np.ndarray) -> np.ndarray:
        return np.kron(self.corr_a1, self.corr_a2) @ self.evolution(h) @ np.kron(self.corr_b1, self.corr_b2)


def infidelity(u: np.ndarray, v: np.ndarray) -> float:
    n = u.shape[0]
    return float(max(0.0, 1.0 - abs(np.trace(u.conj().T @ v)) / n))


def branch_times(c, abc) -> tuple[float, float, float]:
    x, y, z = c
    a, b, cc = abc
    return x / a, (x + y - z) / (a + b - cc), (x + y + z) / (a + b + cc)


def optimal_time(c, abc) -> tuple[float, bool, tuple[float, float, float]]:
    """Minimal interaction time for chamber point ``c`` under coefficients ``(a, b, c)``.

    Returns ``(tau, reflected, (tau0, tau_plus, tau_minus))`` where the branch
    times belong to the reflected point ``(pi/2 - x, y, -z)`` when ``reflected``.
    """
    x, y, z = c
    direct = branch_times((x, y, z), abc)
    mirrored = branch_times((HALF - x, y, -z), abc)
    t1, t2 = max(direct), max(mirrored)
    if t2 < t1:
        return t2 + 0.0, True, mirrored
    return t1 + 0.0, False, direct


def optimal_time_many(coords: np.ndarray, abc) -> np.ndarray:
    """Vectorized ``tau`` for an ``(n, 3)`` array of chamber points."""
    c = np.asarray(coords, dtype=float).reshape(-1, 3)
    a, b, cc = abc
    x, y, z = c.T

    def tmax(x, y, z):
        return np.maximum.reduce([x / a, (x + y - z) / (a + b - cc), (x + y + z) / (a + b + cc)])

    return np.minimum(tmax(x, y, z), tmax(HALF - x, y, -z))


def select_subscheme(tau: float, times) -> str:
    tol = TIE_TOL * max(1.0, tau)
    t0, tp, tm = times
    if t0 >= tau - tol:
        return ND
    if tp >= tau - tol:
        return EA_PLUS
    return EA_MINUS


def sinc(u):
    return np.sinc(np.asarray(u) / np.pi)


@lru_cache(maxsize=1)
def _sinc_extrema() -> np.ndarray:
    # extrema of sin(u)/u solve u cos(u) = sin(u), one in each (k pi, k pi + pi/2)
    pts = [0.0]
    for k in range(1, SINC_BRANCHES + 1):
        pts.append(brentq(lambda u: u * np.cos(u) - np.sin(u), k * np.pi, k * np.pi + np.pi / 2 - 1e-12))
    return np.array(pts)


def sinc_inverse(v: float, u_min: float = 0.0) -> float:
    """Smallest ``u >= u_min`` with ``sin(u)/u == v``; raises InfeasibleError if none."""
    f0 = float(sinc(u_min)) - v
    if abs(f0) <= 1e-14:
        return u_min
    ext = _sinc_extrema()
    lo = u_min
    for k in range(SINC_BRANCHES):
        hi = ext[k + 1]
        if hi <= lo:
            continue
        flo = float(sinc(lo)) - v
        fhi = float(sinc(hi)) - v
        if flo == 0.0:
            return lo
        if flo * fhi <= 0:
            return brentq(lambda u: float(sinc(u)) - v, lo, hi, xtol=1e-15, rtol=1e-15)
        lo = hi
    raise InfeasibleError(f"no sinc branch reaches {v:.6g} within {SINC_BRANCHES} periods")


def _nd_amplitude(s_angle: float, coupling: float, tau: float) -> tuple[float, float]:
    """Drive amplitude and S for one ND block: ``sin(s_angle) = coupling sin(S tau) / S``."""
    if tau <= 0:
        return 0.0, coupling
    if coupling < _DENOM_TOL:
        return 0.0, coupling
    v = np.sin(s_angle) / (coupling * tau)
    u_min = coupling * tau
    if v >= float(sinc(u_min)) - 1e-14:
        return 0.0, coupling
    u = sinc_inverse(v, u_min)
    s = u / tau
    return 0.5 * np.sqrt(max(s * s - coupling * coupling, 0.0)), s


def _check_branch(c, abc, tau: float, branch: int) -> None:
    times = branch_times(c, abc)
    tol = 1e-9 * max(1.0, tau)
    if abs(times[branch] - tau) > tol or max(times) > tau + tol:
        raise ContractError(f"tau={tau:.12g} is not the binding branch time {times[branch]:.12g}")
    if branch != 0 and times[0] >= tau - TIE_TOL * max(1.0, tau):
        raise ContractError("the no-detuning branch is binding; use solve_nd")


def solve_nd(c, abc, tau: float) -> tuple[float, float, NDRecord]:
    """No-detuning drives ``(omega1, omega2)``; ``delta`` is zero."""
    x, y, z = c
    a, b, cc = abc
    _check_branch(c, abc, tau, 0)
    omega1, s1 = _nd_amplitude(y - z, b - cc, tau)
    omega2, s2 = _nd_amplitude(y + z, b + cc, tau)
    return omega1, omega2, NDRecord(s1, s2)


def ea_lhs(alpha, beta, eta, t):
    exp = cmath.exp if np.isscalar(alpha) and np.isscalar(beta) else np.exp
    d1 = 1 - alpha + beta
    d2 = 1 - eta + alpha + 2 * beta
    d3 = 2 * alpha + beta - eta
    return (((1 - alpha) * (1 + alpha + beta) - d1 * eta) / (d1 * d2) * exp(-1j * (2 + 2 * beta - eta) * t)
            + (beta * (1 + alpha + beta) - d1 * eta) / (d1 * d3) * exp(1j * (eta - 2 * alpha) * t)
            + ((1 + alpha - eta) * eta - beta * (1 - alpha - eta)) / (d3 * d2)
            * exp(1j * (2 * alpha + 2 * beta - eta) * t))


def ea_rhs(x, y, z):
    return np.exp(1j * (x - y - z)) - np.exp(1j * (y - x - z)) + np.exp(1j * (z - x - y))


def _ea_point(p, eta):
    # box (alpha, w) -> Q_eta: beta = max(0, eta - alpha) + w / (1 - w)
    alpha, w = p
    beta = max(0.0, eta - alpha) + w / (1.0 - w)
    return alpha, beta


def _safe_lhs(alpha, beta, eta, t):
    # removable singularities at (0, eta) and (1, 0)
    if alpha < 1e-9 and abs(beta - eta) < 1e-9:
        alpha = 1e-9
        beta = eta + 1e-9
    if alpha > 1 - 1e-9 and beta < 1e-9:
        alpha = 1 - 1e-9
        beta = 1e-9
    return ea_lhs(alpha, beta, eta, t)


def solve_ea(c, abc, tau: float, sign: str) -> tuple[float, float, float, EARecord]:
    """Equal-amplitude drives. ``sign`` is ``"plus"`` (omega1 = 0) or ``"minus"`` (omega2 = 0)."""
    x, y, z = c
    a, b, cc = abc
    if sign not in ("plus", "minus"):
        raise ContractError("sign must be 'plus' or 'minus'")
    _check_branch(c, abc, tau, 1 if sign == "plus" else 2)
    if sign == "plus":
        shifted = (x + cc * tau, y + cc * tau, cc * tau - z)
        scale = a + cc
    else:
        shifted = (x - cc * tau, y - cc * tau, z - cc * tau)
        scale = a - cc
    if scale < _DENOM_TOL:
        # a == b == +-c: the frontier is a single point reached without drives
        return 0.0, 0.0, 0.0, EARecord(0.0, 0.0, 0.0, 0.0, shifted)
    eta = min(max((a - b) / scale, 0.0), 1.0)
    t = scale * tau
    target = complex(ea_rhs(*shifted))

    def residual(p):
        alpha, beta = _ea_point(p, eta)
        diff = _safe_lhs(float(alpha), float(beta), eta, t) - target
        return np.array([diff.real, diff.imag])

    def amplitude(p):
        alpha, beta = _ea_point(p, eta)
        om2 = (1 - alpha) * beta * (1 - eta + alpha + beta)
        de2 = alpha * (1 + beta) * (alpha + beta - eta)
        return om2 + de2

    p, res = solve_root_2d(residual, [0.0, 0.0], [1.0, 1.0 - 1e-9], tol=ROOT_TOL, prefer=amplitude)
    if p is None:
        raise InfeasibleError(f"EA root search exhausted (best residual {res:.3g})", res)
    alpha, beta = _ea_point(p, eta)
    omega = scale * np.sqrt(max((1 - alpha) * beta * (1 - eta + alpha + beta), 0.0))
    delta = scale * np.sqrt(max(alpha * (1 + beta) * (alpha + beta - eta), 0.0))
    record = EARecord(float(alpha), float(beta), float(eta), float(t), shifted, res)
    if sign == "plus":
        return 0.0, float(omega), float(-delta), record
    return float(omega), 0.0, float(delta), record


def drive_hamiltonians(omega1: float, omega2: float, delta: float) -> tuple[np.ndarray, np.ndarray]:
    return (omega1 + omega2) * PX + delta * PZ, (omega1 - omega2) * PX + delta * PZ


def local_corrections(target: LocalDecomposition, nf: NormalForm, omega1: float, omega2: float,
                      delta: float, tau: float):
    """Corrections ``(A1, A2, B1, B2)`` and lab-frame drives ``(H1, H2)``.

    Raises InconsistencyError when the solved evolution is not locally
    equivalent to the target.
    """
    d1, d2 = drive_hamiltonians(omega1, omega2, delta)
    total = nf.canonical_matrix() + np.kron(d1, I2) + np.kron(I2, d2)
    evo = canonical_decompose(expm_hermitian(total, tau, tol=1e-9))
    gap = coordinate_distance(evo.coordinate, target.coordinate)
    if gap > COORD_MATCH_TOL:
        raise InconsistencyError(
            f"evolution reaches {tuple(np.round(evo.coordinate, 8))}, "
            f"target is {tuple(np.round(target.coordinate, 8))}")
    u1, u2 = nf.u1, nf.u2
    h1 = u1 @ d1 @ u1.conj().T - nf.h1_res
    h2 = u2 @ d2 @ u2.conj().T - nf.h2_res
    a1 = target.v1 @ evo.v1.conj().T @ u1.conj().T
    a2 = target.v2 @ evo.v2.conj().T @ u2.conj().T
    b1 = u1 @ evo.v3.conj().T @ target.v3
    b2 = u2 @ evo.v4.conj().T @ target.v4
    return (a1, a2, b1, b2), (h1, h2)


def synthesize_pulse(u: np.ndarray, h: np.ndarray | NormalForm, amp_max: float | None = None,
                     nf: NormalForm | None = None) -> PulseSolution:
    """Full solver: time-optimal duration, subscheme, drives and corrections for target ``u``."""
    if isinstance(h, NormalForm):
        nf = h
    elif nf is None:
        nf = normal_form(h)
    abc = nf.coefficients
    target = canonical_decompose(u)
    coord = target.coordinate
    tau, reflected, times = optimal_time(coord, abc)
    solve_coord = (HALF - coord.x, coord.y, -coord.z) if reflected else tuple(coord)
    subscheme = select_subscheme(tau, times)
    if subscheme == ND:
        omega1, omega2, record = solve_nd(solve_coord, abc, tau)
        delta = 0.0
    else:
        omega1, omega2, delta, record = solve_ea(
            solve_coord, abc, tau, "plus" if subscheme == EA_PLUS else "minus")
    (a1, a2, b1, b2), (h1, h2) = local_corrections(target, nf, omega1, omega2, delta, tau)
    sol = PulseSolution(subscheme, float(tau), float(omega1), float(omega2), float(delta),
                        a1, a2, b1, b2, reflected, coord, record, h1, h2)
    if amp_max is not None and sol.max_amplitude > amp_max:
        raise AmplitudeExceeded(sol, amp_max)
    return sol


def verify_solution(sol: PulseSolution, u: np.ndarray, h: np.ndarray | NormalForm) -> float:
    """Phase-insensitive infidelity between ``u`` and the gate the solution implements."""
    if isinstance(h, NormalForm):
        h = h.reconstruct()
    return infidelity(np.asarray(u, dtype=complex), sol.gate(h))


FAMILIES = {
    "cnot": lambda s: (s * np.pi / 4, 0.0, 0.0),
    "b": lambda s: (s * np.pi / 4, s * np.pi / 8, 0.0),
    "swap": lambda s: (s * np.pi / 4, s * np.pi / 4, s * np.pi / 4),
    "iswap": lambda s: (s * np.pi / 4, s * np.pi / 4, 0.0),
}


def family_sweep(family: str, s_grid, h: np.ndarray | NormalForm) -> list[tuple[float, float, float, float, float]]:
    """Rows ``(s, A1/g, A2/g, delta/g, tau*g)`` along a named gate family."""
    nf = h if isinstance(h, NormalForm) else normal_form(h)
    g = nf.strength
    rows = []
    for s in s_grid:
        sol = synthesize_pulse(can(*FAMILIES[family](float(s))), nf)
        rows.append((float(s), sol.a1_amp / g, sol.a2_amp / g, sol.delta / g, sol.tau * g))
    return rows


def frontier_contains(c, abc, tau: float, subscheme: str, tol: float = 1e-9) -> bool:
    """Membership of ``c`` in the ND / EA frontier polygon at time ``tau``."""
    x, y, z = c
    a, b, cc = abc
    if subscheme == ND:
        return (abs(x - a * tau) <= tol and -tol <= y + z <= (b + cc) * tau + tol
                and -tol <= y - z <= (b - cc) * tau + tol)
    inside = a * tau + tol >= x >= y - tol and y + tol >= abs(z)
    if subscheme == EA_MINUS:
        return inside and abs(x + y + z - (a + b + cc) * tau) <= tol and z >= cc * tau - tol
    return inside and abs(x + y - z - (a + b - cc) * tau) <= tol and z <= cc * tau + tol


__all__ = [
    "ND", "EA_PLUS", "EA_MINUS", "PulseSolution", "NDRecord", "EARecord",
    "InfeasibleError", "InconsistencyError", "AmplitudeExceeded",
    "optimal_time", "optimal_time_many", "solve_nd", "solve_ea", "local_corrections",
    "synthesize_pulse", "verify_solution", "family_sweep", "infidelity", "sinc_inverse",
    "ea_lhs", "ea_rhs", "frontier_contains", "canonicalize_coordinate",
]
