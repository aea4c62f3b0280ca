"""Approximate synthesis of 2- and 3-qubit unitaries into {Can, U3} circuits.

The 3-qubit ansatz is one U3 on every qubit followed by blocks
``(A x B) Can(x, y, z)`` on a sequence of qubit pairs. Parameters are fitted with
Levenberg-Marquardt on ``V - e^{i phi} U`` using an analytic Jacobian.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate, kak_gates, u3_gate, u3_matrix, unitary_of
from .numerics import PX, PY, PZ, XX, YY, ZZ, ContractError
from .weyl import can

DEFAULT_EPS = 1e-10
EXCHANGE_EPS = 1e-8
DEFAULT_BUDGET = 7
DEFAULT_RESTARTS = 12
PAIRS3 = ((0, 1), (1, 2), (0, 2))


def lower_bound(n: int, isa: str = "su4") -> int:
    """Parameter-counting lower bound on two-qubit gates for generic n-qubit unitaries."""
    if n < 1:
        raise ContractError("n must be positive")
    num = 4 ** n - 3 * n - 1
    if isa == "su4":
        return -(-num // 9)
    if isa == "cnot":
        return -(-num // 4)
    raise ContractError(f"unknown ISA {isa!r}")


def infidelity(u: np.ndarray, v: np.ndarray) -> float:
    n = u.shape[0]
    return float(max(0.0, 1.0 - abs(np.vdot(u, v)) / n))


@dataclass
class SynthesisResult:
    circuit: Circuit
    infidelity: float
    gate_count: int
    restarts_used: int
    success: bool = True
    placements: tuple = ()


class SynthesisFailure(RuntimeError):
    def __init__(self, best: SynthesisResult):
        super().__init__(f"no circuit within budget reached eps (best infidelity {best.infidelity:.3g})")
        self.best = best


# ---------------------------------------------------------------- ansatz


def _u3_derivs(p):
    """U3 matrix and its three partial derivatives."""
    th, ph, la = p
    c, s = math.cos(th / 2), math.sin(th / 2)
    eph, ela = complex(math.cos(ph), math.sin(ph)), complex(math.cos(la), math.sin(la))
    m = np.array([[c, -ela * s], [eph * s, eph * ela * c]])
    dth = np.array([[-s / 2, -ela * c / 2], [eph * c / 2, -eph * ela * s / 2]])
    dph = np.array([[0, 0], [1j * eph * s, 1j * eph * ela * c]])
    dla = np.array([[0, -1j * ela * s], [0, 1j * eph * ela * c]])
    return m, (dth, dph, dla)


_GENS = (XX, YY, ZZ)


def _pair_embedding(pair, n: int) -> np.ndarray:
    """Permutation ``P`` with ``embed(M) = P (M x I) P^T`` for ``M`` acting on ``pair``."""
    order = list(pair) + [q for q in range(n) if q not in pair]
    dim = 2 ** n
    p = np.zeros((dim, dim))
    for nat in range(dim):
        bits = [(nat >> (n - 1 - q)) & 1 for q in range(n)]
        pf = 0
        for q in order:
            pf = 2 * pf + bits[q]
        p[nat, pf] = 1.0
    return p


def _u3(p) -> np.ndarray:
    th, ph, la = p
    c, s = math.cos(th / 2), math.sin(th / 2)
    eph, ela = complex(math.cos(ph), math.sin(ph)), complex(math.cos(la), math.sin(la))
    return np.array([[c, -ela * s], [eph * s, eph * ela * c]])


class Ansatz:
    """``V = B_k ... B_1 (u_0 x u_1 x ... )`` with ``B_j = embed((A x B) Can)`` on ``placements[j]``."""

    def __init__(self, n: int, placements):
        self.n = n
        self.dim = 2 ** n
        self.placements = tuple(tuple(p) for p in placements)
        if any(max(p) >= n or p[0] == p[1] for p in self.placements):
            raise ContractError(f"bad placements {self.placements} for {n} qubits")
        self.n_params = 3 * n + 9 * len(self.placements)
        self._emb = [_pair_embedding(p, n) for p in self.placements]
        self._eye_rest = np.eye(2 ** (n - 2))

    def _first(self, params):
        mats = [_u3(params[3 * q: 3 * q + 3]) for q in range(self.n)]
        v = mats[0]
        for m in mats[1:]:
            v = np.kron(v, m)
        return mats, v

    def _block(self, params, j):
        base = 3 * self.n + 9 * j
        p = params[base: base + 9]
        return np.kron(_u3(p[0:3]), _u3(p[3:6])) @ can(*p[6:9])

    def _embed(self, m4, j):
        e = self._emb[j]
        return e @ np.kron(m4, self._eye_rest) @ e.T

    def unitary(self, params) -> np.ndarray:
        _, v = self._first(params)
        for j in range(len(self.placements)):
            v = self._embed(self._block(params, j), j) @ v
        return v

    def unitary_and_jacobian(self, params):
        """``V`` and ``dV/dp`` stacked as (n_params, dim, dim)."""
        n, dim = self.n, self.dim
        k = len(self.placements)
        mats, first = self._first(params)
        d1 = [_u3_derivs(params[3 * q: 3 * q + 3])[1] for q in range(n)]
        full = []
        derivs = []
        for j in range(k):
            base = 3 * n + 9 * j
            p = params[base: base + 9]
            a, da = _u3_derivs(p[0:3])
            b, db = _u3_derivs(p[3:6])
            cm = can(*p[6:9])
            ab = np.kron(a, b)
            m = ab @ cm
            ds = [np.kron(d, b) @ cm for d in da] + [np.kron(a, d) @ cm for d in db]
            ds += [ab @ (-1j * g) @ cm for g in _GENS]
            full.append(self._embed(m, j))
            derivs.append(np.stack(ds))
        prefix = [first]
        for j in range(k):
            prefix.append(full[j] @ prefix[-1])
        suffix = [None] * (k + 1)
        suffix[k] = np.eye(dim, dtype=complex)
        for j in range(k - 1, -1, -1):
            suffix[j] = suffix[j + 1] @ full[j]
        jac = np.empty((self.n_params, dim, dim), dtype=complex)
        for q in range(n):
            for t in range(3):
                f = None
                for r in range(n):
                    m = d1[q][t] if r == q else mats[r]
                    f = m if f is None else np.kron(f, m)
                jac[3 * q + t] = suffix[0] @ f
        rest = dim // 4
        for j in range(k):
            e = self._emb[j]
            after = suffix[j + 1] @ e
            before = (e.T @ prefix[j]).reshape(4, rest * dim)
            mid = (derivs[j] @ before).reshape(9, dim, dim)
            base = 3 * n + 9 * j
            jac[base: base + 9] = after @ mid
        return prefix[-1], jac

    def block_matrix(self, params, j) -> np.ndarray:
        return self._block(params, j)

    def to_circuit(self, params, qubits=None) -> Circuit:
        qubits = list(range(self.n)) if qubits is None else list(qubits)
        gates = [Gate("u3", (qubits[q],), tuple(params[3 * q: 3 * q + 3])) for q in range(self.n)]
        for j, (a, b) in enumerate(self.placements):
            gates += kak_gates(self._block(params, j), qubits[a], qubits[b], drop_identity=False)
        return merge_1q(Circuit(max(qubits) + 1, gates))


def merge_1q(circuit: Circuit) -> Circuit:
    """Fuse runs of single-qubit gates into one U3 each (phases dropped)."""
    pending: dict[int, np.ndarray] = {}
    out = []

    def flush(q):
        if q in pending:
            out.append(u3_gate(pending.pop(q), q))

    for g in circuit.gates:
        if g.arity == 1:
            q = g.qubits[0]
            pending[q] = g.matrix() @ pending.get(q, np.eye(2))
            continue
        for q in g.qubits:
            flush(q)
        out.append(g)
    for q in sorted(pending):
        flush(q)
    return circuit.with_gates(out)


def _fit(ansatz: Ansatz, target: np.ndarray, x0: np.ndarray, eps: float, max_iter: int = 400,
         window: int = 20):
    """Levenberg-Marquardt on ``V - e^{i phi} U``; returns ``(params, infidelity)``.

    Stops once the infidelity is below ``eps / 100`` or improves by less than
    ``max(1e-14, 1% of its value)`` over ``window`` iterations.
    """
    dim = ansatz.dim
    x = x0.copy()
    x[-1] = np.angle(np.vdot(target, ansatz.unitary(x[:-1])))

    def resid_of(v, phi):
        d = (v - np.exp(1j * phi) * target).ravel()
        return np.concatenate([d.real, d.imag])

    def inf_of(v):
        return max(0.0, 1.0 - abs(np.vdot(target, v)) / dim)

    v, dv = ansatz.unitary_and_jacobian(x[:-1])
    r = resid_of(v, x[-1])
    cost = r @ r
    hist = [inf_of(v)]
    mu = 1e-3
    for _ in range(max_iter):
        if hist[-1] <= eps * 1e-2:
            break
        if len(hist) > window and hist[-window - 1] - hist[-1] < max(1e-14, 1e-2 * hist[-1]):
            break
        dphi = (-1j * np.exp(1j * x[-1]) * target).reshape(1, -1)
        full = np.concatenate([dv.reshape(ansatz.n_params, -1), dphi])
        jr = np.concatenate([full.real, full.imag], axis=1)
        a = jr @ jr.T
        g = jr @ r
        diag = np.diag(a).copy()
        accepted = False
        for _ in range(10):
            try:
                step = np.linalg.solve(a + mu * np.diag(diag + 1e-12), -g)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            xn = x + step
            vn = ansatz.unitary(xn[:-1])
            rn = resid_of(vn, xn[-1])
            cn = rn @ rn
            if cn < cost:
                x, r, cost = xn, rn, cn
                mu = max(mu / 3, 1e-15)
                accepted = True
                break
            mu *= 4
        if not accepted:
            break
        v, dv = ansatz.unitary_and_jacobian(x[:-1])
        hist.append(inf_of(v))
    return x, hist[-1]


def placements_for(count: int, n: int = 3):
    """All pair sequences of length ``count`` without immediate repetition."""
    pairs = PAIRS3 if n == 3 else ((0, 1),)
    if count == 0:
        yield ()
        return
    for seq in itertools.product(pairs, repeat=count):
        if all(seq[i] != seq[i + 1] for i in range(count - 1)):
            yield seq


def instantiate(target: np.ndarray, placements, eps: float = DEFAULT_EPS,
                restarts: int = DEFAULT_RESTARTS, seed: int = 0, max_iter: int = 400):
    """Fit one fixed structure; returns ``(params, infidelity, restarts_used)``."""
    n = int(round(math.log2(target.shape[0])))
    ansatz = Ansatz(n, placements)
    rng = np.random.default_rng(seed)
    best = (None, np.inf)
    used = 0
    for r in range(restarts):
        used = r + 1
        x0 = rng.uniform(0, 2 * np.pi, ansatz.n_params + 1)
        x, inf = _fit(ansatz, target, x0, eps, max_iter)
        if inf < best[1]:
            best = (x[:-1], inf)
        if inf <= eps:
            break
    return ansatz, best[0], best[1], used


def _local_factor(target: np.ndarray, n: int):
    """Factors ``[m_0, ..., m_{n-1}]`` with ``target ~ m_0 x ... x m_{n-1}``, or None."""
    mats = []
    rest = target
    for _ in range(n - 1):
        d = rest.shape[0] // 2
        r = rest.reshape(2, d, 2, d).transpose(0, 2, 1, 3).reshape(4, d * d)
        u, s, vh = np.linalg.svd(r)
        if s[1] > 1e-9 * s[0]:
            return None
        mats.append(u[:, 0].reshape(2, 2) * np.sqrt(2))
        rest = vh[0].reshape(d, d) * s[0] / np.sqrt(2)
    mats.append(rest)
    return mats


def approx_synthesize(target: np.ndarray, w: int | None = None, eps: float = DEFAULT_EPS,
                      budget: int = DEFAULT_BUDGET, restarts: int = DEFAULT_RESTARTS,
                      seed: int = 0, max_count: int | None = None,
                      raise_on_failure: bool = False, descending: bool = False) -> SynthesisResult:
    """Fewest-Can circuit for a 4x4 or 8x8 unitary, within infidelity ``eps``.

    Counts are tried from 0 upward (up to ``budget``, or ``max_count`` when
    given). With ``descending`` the search starts at the top count and walks
    down until a count fails, which is cheaper when little reduction is
    expected. On failure the best attempt is returned with ``success=False``
    (or raised as :class:`SynthesisFailure`).
    """
    target = np.asarray(target, dtype=complex)
    n = int(round(math.log2(target.shape[0])))
    if w is None:
        w = n
    if w != n or w not in (2, 3):
        raise ContractError("approx_synthesize handles 2- or 3-qubit targets")
    if w == 2:
        circ = merge_1q(Circuit(2, kak_gates(target, 0, 1)))
        inf = infidelity(target, unitary_of(circ))
        return SynthesisResult(circ, inf, circ.count2q(), 0, inf <= max(eps, 1e-12), ((0, 1),))
    top = budget if max_count is None else min(budget, max_count)
    best = None
    total = 0

    def search(count):
        nonlocal best, total
        if count == 0:
            mats = _local_factor(target, n)
            if mats is None:
                return None
            circ = Circuit(n, [u3_gate(m / np.sqrt(np.linalg.det(m)), q) for q, m in enumerate(mats)])
            inf = infidelity(target, unitary_of(circ))
            return SynthesisResult(circ, inf, 0, total, True, ()) if inf <= eps else None
        for placements in placements_for(count, n):
            ansatz, params, inf, used = instantiate(target, placements, eps, restarts, seed)
            total += used
            if best is None or inf < best[2]:
                best = (ansatz, params, inf, placements)
            if inf <= eps:
                circ = ansatz.to_circuit(params)
                inf = infidelity(target, unitary_of(circ))
                if inf <= eps:
                    return SynthesisResult(circ, inf, circ.count2q(), total, True, placements)
        return None

    if descending:
        found = None
        for count in range(top, -1, -1):
            res = search(count)
            if res is None:
                break
            found = res
        if found is not None:
            found.restarts_used = total
            return found
    else:
        for count in range(top + 1):
            res = search(count)
            if res is not None:
                return res
    if best is None:
        circ = Circuit(n)
        res = SynthesisResult(circ, infidelity(target, np.eye(2 ** n)), 0, total, False, ())
    else:
        circ = best[0].to_circuit(best[1])
        res = SynthesisResult(circ, infidelity(target, unitary_of(circ)), circ.count2q(), total,
                              False, best[3])
    if raise_on_failure:
        raise SynthesisFailure(res)
    return res


def exchange_pair(g1: Gate, g2: Gate, eps: float = EXCHANGE_EPS, restarts: int = 4,
                  seed: int = 0) -> tuple[Gate, Gate] | None:
    """Rewrite ``g1; g2`` (sharing exactly one qubit) as ``g2'; g1'`` on swapped order.

    Returns two two-qubit unitary gates ``(g2', g1')`` with the 8x8 product
    matching within ``eps``, or None.
    """
    s1, s2 = set(g1.qubits), set(g2.qubits)
    if g1.arity != 2 or g2.arity != 2 or len(s1 & s2) != 1:
        raise ContractError("exchange_pair needs two-qubit gates sharing exactly one qubit")
    (qb,) = s1 & s2
    (qa,) = s1 - {qb}
    (qc,) = s2 - {qb}
    labels = [qa, qb, qc]
    local = {q: i for i, q in enumerate(labels)}
    sub = Circuit(3, [g1.remap(local), g2.remap(local)])
    target = unitary_of(sub)
    ansatz, params, inf, _ = instantiate(target, ((1, 2), (0, 1)), eps, restarts, seed)
    if params is None or inf > eps:
        return None
    u = [u3_matrix(*params[3 * q: 3 * q + 3]) for q in range(3)]
    m_first = ansatz.block_matrix(params, 0) @ np.kron(u[1], u[2])
    m_second = ansatz.block_matrix(params, 1) @ np.kron(u[0], np.eye(2))
    new2 = Gate("unitary", (qb, qc), unitary=m_first)
    new1 = Gate("unitary", (qa, qb), unitary=m_second)
    check = Circuit(3, [new2.remap(local), new1.remap(local)])
    if infidelity(target, unitary_of(check)) > eps:
        return None
    return new2, new1


__all__ = [
    "lower_bound", "infidelity", "approx_synthesize", "exchange_pair", "SynthesisResult",
    "SynthesisFailure", "Ansatz", "instantiate", "placements_for", "merge_1q",
]
