"""Circuit IR over U3 / Can / named gates, dependency DAG, OpenQASM 2.0 subset, metrics, simulation.

Qubit order is big-endian: qubit 0 is the most significant bit of a basis index,
and a gate's matrix is written in the order of its ``qubits`` tuple.
"""

from __future__ import annotations

import ast
import math
import operator
import re
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import I2, PX, PY, PZ, ContractError
from .weyl import WeylCoordinate, can, canonical_decompose, weyl_coordinates

MAX_UNITARY_QUBITS = 7
MAX_STATEVECTOR_QUBITS = 16
CNOT_TAU = np.pi / np.sqrt(2)

_S = np.diag([1, 1j])
_T = np.diag([1, np.exp(1j * np.pi / 4)])
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

_FIXED = {
    "h": _H, "x": PX, "y": PY, "z": PZ, "s": _S, "sdg": _S.conj().T,
    "t": _T, "tdg": _T.conj().T, "id": I2,
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_CCX = np.eye(8, dtype=complex)
_CCX[6:, 6:] = PX
_FIXED["ccx"] = _CCX

# kind -> (arity, number of real parameters); arity None means "from the matrix"
KINDS = {
    "u3": (1, 3), "rx": (1, 1), "ry": (1, 1), "rz": (1, 1),
    "h": (1, 0), "x": (1, 0), "y": (1, 0), "z": (1, 0), "s": (1, 0), "sdg": (1, 0),
    "t": (1, 0), "tdg": (1, 0), "id": (1, 0),
    "cx": (2, 0), "cz": (2, 0), "swap": (2, 0), "cp": (2, 1), "can": (2, 3),
    "ccx": (3, 0), "unitary": (None, 0),
}


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -np.exp(1j * lam) * s],
                     [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]], dtype=complex)


def u3_params(m: np.ndarray, tol: float = 1e-12) -> tuple[float, float, float]:
    """``(theta, phi, lam)`` with ``m == e^{i a} u3_matrix(theta, phi, lam)`` for some phase ``a``."""
    m = np.asarray(m, dtype=complex)
    c, s = abs(m[0, 0]), abs(m[1, 0])
    theta = 2 * math.atan2(s, c)
    if s < tol:
        alpha = np.angle(m[0, 0])
        return theta, 0.0, float(np.angle(m[1, 1]) - alpha)
    if c < tol:
        alpha = np.angle(-m[0, 1])
        return theta, float(np.angle(m[1, 0]) - alpha), 0.0
    alpha = np.angle(m[0, 0])
    return theta, float(np.angle(m[1, 0]) - alpha), float(np.angle(-m[0, 1]) - alpha)


def _rot(pauli, theta):
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * pauli


@dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    unitary: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity, npar = KINDS[self.kind]
        if self.kind == "unitary":
            if self.unitary is None:
                raise ContractError("unitary gate needs a matrix")
            u = np.asarray(self.unitary, dtype=complex)
            arity = int(round(math.log2(u.shape[0])))
            if u.shape != (2 ** arity, 2 ** arity) or arity > 3:
                raise ContractError("unitary blocks must be 2^k x 2^k with k <= 3")
            object.__setattr__(self, "unitary", u)
        if len(self.qubits) != arity:
            raise ContractError(f"{self.kind} acts on {arity} qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ContractError(f"repeated qubit in {self.kind}{self.qubits}")
        if len(self.params) != npar:
            raise ContractError(f"{self.kind} takes {npar} parameters")
        if self.kind == "can" and not WeylCoordinate(*self.params).in_chamber():
            raise ContractError(f"can parameters {self.params} are not chamber-canonical")

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def matrix(self) -> np.ndarray:
        k, p = self.kind, self.params
        if k in _FIXED:
            return _FIXED[k]
        if k == "u3":
            return u3_matrix(*p)
        if k == "rx":
            return _rot(PX, p[0])
        if k == "ry":
            return _rot(PY, p[0])
        if k == "rz":
            return _rot(PZ, p[0])
        if k == "cp":
            return np.diag([1, 1, 1, np.exp(1j * p[0])])
        if k == "can":
            return can(*p)
        return self.unitary

    def coordinate(self) -> WeylCoordinate:
        if self.arity != 2:
            raise ContractError("Weyl coordinates exist only for two-qubit gates")
        if self.kind == "can":
            return WeylCoordinate(*self.params)
        return WeylCoordinate(*weyl_coordinates(self.matrix()))

    def on(self, *qubits: int) -> "Gate":
        return replace(self, qubits=tuple(qubits))

    def remap(self, mapping) -> "Gate":
        return replace(self, qubits=tuple(mapping[q] for q in self.qubits))

    def __repr__(self):
        par = "(" + ", ".join(f"{v:.6g}" for v in self.params) + ")" if self.params else ""
        return f"{self.kind}{par}{list(self.qubits)}"


def u3_gate(m: np.ndarray, q: int) -> Gate:
    return Gate("u3", (q,), u3_params(m))


def can_gate(c, q0: int, q1: int) -> Gate:
    return Gate("can", (q0, q1), tuple(float(v) + 0.0 for v in c))


def kak_gates(u: np.ndarray, q0: int, q1: int, drop_identity: bool = True, tol: float = 1e-12) -> list[Gate]:
    """Analytic ``U3 x U3, Can, U3 x U3`` expansion of a two-qubit unitary (phase dropped)."""
    dec = canonical_decompose(u)
    gates = [u3_gate(dec.v3, q0), u3_gate(dec.v4, q1)]
    if not (drop_identity and dec.coordinate.l1() < tol):
        gates.append(can_gate(dec.coordinate, q0, q1))
    gates += [u3_gate(dec.v1, q0), u3_gate(dec.v2, q1)]
    return gates


def _identity_perm(n):
    return tuple(range(n))


@dataclass(frozen=True, eq=False)
class Circuit:
    """Gate list on ``n_qubits`` wires.

    ``output_permutation[q]`` is the wire holding logical qubit ``q`` after the
    gates have run (the identity unless rewiring or mirroring relabeled wires).
    """

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    output_permutation: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        perm = self.output_permutation
        perm = _identity_perm(self.n_qubits) if perm is None else tuple(int(p) for p in perm)
        object.__setattr__(self, "output_permutation", perm)
        if sorted(perm) != list(range(self.n_qubits)):
            raise ContractError("output_permutation must be a bijection on the qubits")
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise ContractError(f"{g} addresses a qubit outside 0..{self.n_qubits - 1}")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def with_gates(self, gates, output_permutation=None) -> "Circuit":
        perm = self.output_permutation if output_permutation is None else output_permutation
        return Circuit(self.n_qubits, tuple(gates), perm)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ContractError("cannot concatenate circuits of different widths")
        if other.output_permutation != _identity_perm(self.n_qubits) and other.gates:
            raise ContractError("right operand must not carry a permutation")
        return Circuit(self.n_qubits, self.gates + other.gates, self.output_permutation)

    def two_qubit_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.arity == 2]

    def count2q(self) -> int:
        return sum(1 for g in self.gates if g.arity == 2)

    def inverse(self) -> "Circuit":
        """Exact inverse as unitary blocks (the output permutation must be trivial)."""
        if self.output_permutation != _identity_perm(self.n_qubits):
            raise ContractError("inverse of a permuted circuit is not supported")
        return Circuit(self.n_qubits, [Gate("unitary", g.qubits, unitary=g.matrix().conj().T)
                                       for g in reversed(self.gates)])

    def __repr__(self):
        return f"Circuit(n={self.n_qubits}, {len(self.gates)} gates, perm={self.output_permutation})"


# ---------------------------------------------------------------- DAG


class CircuitDAG:
    """Qubit-wise dependency DAG; node ``i`` is ``gates[i]``."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.gates = list(circuit.gates)
        n = len(self.gates)
        self.preds: list[set[int]] = [set() for _ in range(n)]
        self.succs: list[set[int]] = [set() for _ in range(n)]
        last = {}
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                if q in last:
                    self.preds[i].add(last[q])
                    self.succs[last[q]].add(i)
                last[q] = i

    def __len__(self):
        return len(self.gates)

    def edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for i, ss in enumerate(self.succs) for j in ss)

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.preds]
        ready = [i for i, d in enumerate(indeg) if d == 0]
        order = []
        while ready:
            i = min(ready)
            ready.remove(i)
            order.append(i)
            for j in self.succs[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
        if len(order) != len(self.gates):
            raise ContractError("dependency graph has a cycle")
        return order

    def to_circuit(self, order=None) -> Circuit:
        order = self.topological_order() if order is None else order
        return self.circuit.with_gates([self.gates[i] for i in order])

    def longest_path(self, weight) -> float:
        """Maximum over paths of the summed ``weight(gate)``."""
        best = [0.0] * len(self.gates)
        for i in self.topological_order():
            start = max((best[p] for p in self.preds[i]), default=0.0)
            best[i] = start + weight(self.gates[i])
        return max(best, default=0.0)

    def layers(self) -> list[list[int]]:
        depth = [0] * len(self.gates)
        for i in self.topological_order():
            depth[i] = 1 + max((depth[p] for p in self.preds[i]), default=0)
        out: list[list[int]] = [[] for _ in range(max(depth, default=0))]
        for i, d in enumerate(depth):
            out[d - 1].append(i)
        return out


# ---------------------------------------------------------------- simulation


def _apply(state: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    """Apply ``mat`` to the leading ``n`` binary axes of ``state`` (extra trailing axes allowed)."""
    k = len(qubits)
    t = mat.reshape((2,) * (2 * k))
    moved = np.tensordot(t, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(moved, list(range(k)), list(qubits))


def _permutation_fixup(state: np.ndarray, perm, n: int) -> np.ndarray:
    # logical qubit q sits on wire perm[q]; move it back to axis q
    if tuple(perm) == _identity_perm(n):
        return state
    return np.moveaxis(state, list(perm), list(range(n)))


def unitary_of(circuit: Circuit) -> np.ndarray:
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ContractError(f"unitary_of refuses n={n} > {MAX_UNITARY_QUBITS}")
    dim = 2 ** n
    state = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in circuit.gates:
        state = _apply(state, g.matrix(), g.qubits, n)
    state = _permutation_fixup(state, circuit.output_permutation, n)
    return state.reshape(dim, dim)


def statevector_run(circuit: Circuit, state: np.ndarray | None = None) -> np.ndarray:
    n = circuit.n_qubits
    if n > MAX_STATEVECTOR_QUBITS:
        raise ContractError(f"statevector_run refuses n={n} > {MAX_STATEVECTOR_QUBITS}")
    if state is None:
        state = np.zeros(2 ** n, dtype=complex)
        state[0] = 1.0
    psi = np.asarray(state, dtype=complex).reshape((2,) * n)
    for g in circuit.gates:
        psi = _apply(psi, g.matrix(), g.qubits, n)
    psi = _permutation_fixup(psi, circuit.output_permutation, n)
    return psi.reshape(-1)


def infidelity(u: np.ndarray, v: np.ndarray) -> float:
    """``1 - |Tr(U^dag V)| / N``; insensitive to global phase."""
    n = u.shape[0]
    return float(max(0.0, 1.0 - abs(np.vdot(u, v)) / n))


def random_state(n: int, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    psi = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    return psi / np.linalg.norm(psi)


def equivalence_error(a: Circuit, b: Circuit, rng=0, n_states: int = 3) -> float:
    """Infidelity between two circuits: exact unitaries for small n, random states otherwise."""
    if a.n_qubits != b.n_qubits:
        raise ContractError("circuits have different widths")
    if a.n_qubits <= MAX_UNITARY_QUBITS:
        return infidelity(unitary_of(a), unitary_of(b))
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(n_states):
        psi = random_state(a.n_qubits, rng)
        ov = abs(np.vdot(statevector_run(a, psi), statevector_run(b, psi)))
        worst = max(worst, 1.0 - ov)
    return worst


# ---------------------------------------------------------------- rewiring / MCX


def rewire(circuit: Circuit, permutation) -> Circuit:
    """Relabel wire ``q`` as ``permutation[q]`` everywhere, inputs and outputs included."""
    p = tuple(int(v) for v in permutation)
    if sorted(p) != list(range(circuit.n_qubits)):
        raise ContractError("rewire needs a permutation of the qubits")
    old = circuit.output_permutation
    inv = np.argsort(p)
    # logical p[q] ends on wire p[old[q]]
    perm = tuple(p[old[inv[w]]] for w in range(circuit.n_qubits))
    return Circuit(circuit.n_qubits, [g.remap(p) for g in circuit.gates], perm)


def decompose_mcx(controls, target: int, ancillas=(), n_qubits: int | None = None) -> Circuit:
    """Multi-controlled X as CCX/CX gates.

    Three or more controls use a Toffoli V-chain over ``len(controls) - 2`` clean
    ancillas (prepared in and returned to ``|0>``).
    """
    controls = [int(c) for c in controls]
    ancillas = [int(a) for a in ancillas]
    used = controls + [target] + ancillas
    if len(set(used)) != len(used):
        raise ContractError("controls, target and ancillas must be distinct")
    n = n_qubits if n_qubits is not None else max(used) + 1
    k = len(controls)
    if k == 0:
        return Circuit(n, [Gate("x", (target,))])
    if k == 1:
        return Circuit(n, [Gate("cx", (controls[0], target))])
    if k == 2:
        return Circuit(n, [Gate("ccx", (controls[0], controls[1], target))])
    if len(ancillas) < k - 2:
        raise ContractError(f"{k} controls need {k - 2} clean ancillas")
    chain = [Gate("ccx", (controls[0], controls[1], ancillas[0]))]
    for i in range(2, k - 1):
        chain.append(Gate("ccx", (controls[i], ancillas[i - 2], ancillas[i - 1])))
    top = Gate("ccx", (controls[k - 1], ancillas[k - 3], target))
    return Circuit(n, chain + [top] + chain[::-1])


# ---------------------------------------------------------------- metrics


@dataclass
class Metrics:
    count2q: int = 0
    depth2q: int = 0
    duration: float = 0.0
    distinct_su4: int = 0

    def to_dict(self) -> dict:
        return {"count2q": self.count2q, "depth2q": self.depth2q,
                "duration_ginv": self.duration, "distinct_su4": self.distinct_su4}


def cnot_count(c, tol: float = 1e-9) -> int:
    """CNOTs needed for a two-qubit class: 0, 1 (CNOT class), 2 (z == 0) or 3."""
    x, y, z = c
    if abs(x) + abs(y) + abs(z) < tol:
        return 0
    if abs(x - np.pi / 4) < tol and abs(y) < tol and abs(z) < tol:
        return 1
    if abs(z) < tol:
        return 2
    return 3


def gate_duration(g: Gate, nf=None) -> float:
    """Pulse time of one gate: 0 for 1Q gates; ``optimal_time`` under ``nf``;
    ``pi/sqrt(2)`` per CNOT for the conventional scheme (``nf`` is None or "cnot")."""
    if g.arity < 2:
        return 0.0
    if g.arity > 2:
        raise ContractError(f"{g.kind} must be decomposed before timing")
    if nf is None or (isinstance(nf, str) and nf in ("cnot", "conventional")):
        if g.kind == "cx" or g.kind == "cz":
            return CNOT_TAU
        return CNOT_TAU * cnot_count(g.coordinate())
    from .scheme import optimal_time
    return optimal_time(g.coordinate(), nf.coefficients)[0]


def metrics(circuit: Circuit, nf=None, distinct_tol: float = 1e-6) -> Metrics:
    """#2Q, 2Q depth, critical-path duration and distinct SU(4) count.

    ``nf`` is a NormalForm (time-optimal pulses) or None / "cnot" for the
    conventional CNOT scheme. Gates on three or more qubits count as 0 two-qubit
    gates and are ignored for depth and duration.
    """
    from .passes import count_distinct_su4

    if not circuit.gates:
        return Metrics()
    dag = CircuitDAG(circuit)
    count = circuit.count2q()
    depth = int(dag.longest_path(lambda g: 1.0 if g.arity == 2 else 0.0))
    cache: dict[tuple, float] = {}

    def weight(g):
        if g.arity != 2:
            return 0.0
        key = (g.kind, g.params) if g.kind != "unitary" else None
        if key is not None and key in cache:
            return cache[key]
        w = gate_duration(g, nf)
        if key is not None:
            cache[key] = w
        return w

    duration = dag.longest_path(weight)
    return Metrics(count, depth, float(duration), count_distinct_su4(circuit, distinct_tol))


# ---------------------------------------------------------------- OpenQASM 2.0 subset


class QasmError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
          "ln": math.log, "sqrt": math.sqrt}


def _eval_expr(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(text.replace("^", "**"), mode="eval"))


_QASM_ALIASES = {"u": "u3", "cnot": "cx", "cu1": "cp", "cphase": "cp", "toffoli": "ccx"}
_STMT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*(.*)$", re.S)
_ARG = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")


def _split_params(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        out.append(cur)
    return out


def _statements(text: str):
    """Yield ``(statement, line, col)``; comments stripped, gate bodies kept intact."""
    text = re.sub(r"//[^\n]*", lambda m: " " * len(m.group()), text)
    line, col = 1, 1
    start = None
    buf = ""
    depth = 0
    for ch in text:
        if start is None and not ch.isspace():
            start = (line, col)
        if start is not None:
            buf += ch
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                yield buf.strip(), start[0], start[1]
                buf, start = "", None
        elif ch == ";" and depth == 0:
            yield buf.strip()[:-1].strip(), start[0], start[1]
            buf, start = "", None
        if ch == "\n":
            line, col = line + 1, 1
        else:
            col += 1
    if buf.strip():
        raise QasmError("missing ';' at end of input", *start)


def parse_qasm(text: str) -> Circuit:
    """Parse the OpenQASM 2.0 subset: one ``qreg``, the gate vocabulary of :class:`Gate`.

    Barriers, ``creg`` and gate declarations are skipped; measurements are dropped
    with a warning. Non-canonical ``can`` parameters are re-expressed as a
    canonical Can with U3 locals.
    """
    n = None
    reg = None
    gates: list[Gate] = []
    for stmt, line, col in _statements(text):
        if not stmt:
            continue
        head = stmt.split(None, 1)[0]
        if head == "OPENQASM":
            if not re.match(r"OPENQASM\s+2(\.0)?$", stmt):
                raise QasmError("only OPENQASM 2.0 is supported", line, col)
            continue
        if head == "include":
            continue
        if head in ("gate", "opaque"):
            continue
        if head == "qreg":
            m = re.match(r"qreg\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$", stmt)
            if not m:
                raise QasmError("malformed qreg", line, col)
            if reg is not None:
                raise QasmError("only one qreg is supported", line, col)
            reg, n = m.group(1), int(m.group(2))
            continue
        if head == "creg":
            continue
        if head == "barrier":
            continue
        if head == "measure":
            warnings.warn(f"line {line}: measurement dropped", stacklevel=2)
            continue
        m = _STMT.match(stmt)
        if not m:
            raise QasmError(f"syntax error in {stmt!r}", line, col)
        name, ptext, atext = m.group(1), m.group(2), m.group(3)
        name = _QASM_ALIASES.get(name, name)
        if name not in ("u1", "u2") and (name not in KINDS or name == "unitary"):
            raise QasmError(f"unsupported gate {m.group(1)!r}", line, col)
        if reg is None:
            raise QasmError("gate before qreg declaration", line, col)
        try:
            params = [_eval_expr(p.strip()) for p in _split_params(ptext)] if ptext else []
        except (ValueError, SyntaxError, ZeroDivisionError) as exc:
            raise QasmError(f"bad parameter: {exc}", line, col) from None
        qubits = []
        for a in atext.split(","):
            am = _ARG.match(a.strip())
            if not am:
                raise QasmError(f"bad qubit argument {a.strip()!r}", line, col)
            if am.group(1) != reg:
                raise QasmError(f"unknown register {am.group(1)!r}", line, col)
            q = int(am.group(2))
            if q >= n:
                raise QasmError(f"qubit {q} out of range for {reg}[{n}]", line, col)
            qubits.append(q)
        if name == "u1":
            name, params = "u3", [0.0, 0.0] + params
        elif name == "u2":
            name, params = "u3", [np.pi / 2] + params
        try:
            if name == "can" and not WeylCoordinate(*params).in_chamber():
                gates.extend(kak_gates(can(*params), *qubits, drop_identity=False))
            else:
                gates.append(Gate(name, tuple(qubits), tuple(params)))
        except (ContractError, TypeError) as exc:
            raise QasmError(str(exc), line, col) from None
    return Circuit(n or 0, gates)


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_qasm(circuit: Circuit) -> str:
    """OpenQASM 2.0 text. Can gates use an opaque ``can(x,y,z)`` declaration;
    two-qubit unitary blocks are expanded analytically. A non-trivial
    ``output_permutation`` is realized with trailing SWAPs."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    body = []
    uses_can = False
    gates = list(circuit.gates)
    gates += _permutation_swaps(circuit.output_permutation)
    for g in gates:
        if g.kind == "unitary":
            if g.arity == 1:
                body.append(_emit_gate(u3_gate(g.unitary, g.qubits[0])))
                continue
            if g.arity != 2:
                raise ContractError("three-qubit unitary blocks have no QASM form")
            for h in kak_gates(g.unitary, *g.qubits):
                uses_can |= h.kind == "can"
                body.append(_emit_gate(h))
            continue
        uses_can |= g.kind == "can"
        body.append(_emit_gate(g))
    if uses_can:
        lines.append("opaque can(x,y,z) a,b;")
    lines.append(f"qreg q[{circuit.n_qubits}];")
    return "\n".join(lines + body) + "\n"


def _emit_gate(g: Gate) -> str:
    name = "u3" if g.kind == "u3" else g.kind
    par = "(" + ",".join(_fmt(p) for p in g.params) + ")" if g.params else ""
    args = ",".join(f"q[{q}]" for q in g.qubits)
    return f"{name}{par} {args};"


def _permutation_swaps(perm) -> list[Gate]:
    """SWAP gates moving the content of wire ``perm[q]`` to wire ``q``."""
    perm = list(perm)
    where = {q: w for q, w in enumerate(perm)}
    at = {w: q for q, w in where.items()}
    out = []
    for q in range(len(perm)):
        w = where[q]
        if w != q:
            other = at[q]
            out.append(Gate("swap", (q, w)))
            where[other], at[w] = w, other
            where[q], at[q] = q, q
    return out


__all__ = [
    "Gate", "Circuit", "CircuitDAG", "Metrics", "QasmError", "parse_qasm", "emit_qasm",
    "metrics", "unitary_of", "statevector_run", "decompose_mcx", "rewire", "infidelity",
    "equivalence_error", "kak_gates", "u3_params", "u3_matrix", "gate_duration", "cnot_count",
    "CNOT_TAU", "random_state",
]
