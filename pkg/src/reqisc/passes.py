"""Compiler passes: 2Q fusion, partitioning, DAG compacting, hierarchical synthesis,
template-based assembly, near-identity mirroring, and the Red / Full pipelines."""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import (
    Circuit, CircuitDAG, Gate, Metrics, can_gate, emit_qasm, infidelity, kak_gates,
    metrics, parse_qasm, unitary_of, MAX_UNITARY_QUBITS,
)
from .numerics import ContractError
from .synth import approx_synthesize, exchange_pair, merge_1q
from .weyl import HALF, QUARTER, WeylCoordinate, can, coordinate_distance

log = logging.getLogger(__name__)

DEFAULT_R = 0.15
DEFAULT_MTH = 4
DEFAULT_W = 3
COMPACT_SWEEPS = 4


# ---------------------------------------------------------------- fusion


def fuse_2q_blocks(circuit: Circuit, drop_tol: float = 1e-12) -> Circuit:
    """Merge runs of gates on one qubit pair (with interleaved 1Q gates) into ``U3, Can, U3``.

    Gates on three qubits pass through unchanged. Blocks in the identity class
    leave only single-qubit gates behind.
    """
    n = circuit.n_qubits
    items: list = []  # Gate or [pair, 4x4 matrix]
    open_block: dict[int, int] = {}

    def close(q):
        open_block.pop(q, None)

    for g in circuit.gates:
        if g.arity == 1:
            q = g.qubits[0]
            if q in open_block:
                blk = items[open_block[q]]
                a, b = blk[0]
                m = np.kron(g.matrix(), np.eye(2)) if q == a else np.kron(np.eye(2), g.matrix())
                blk[1] = m @ blk[1]
            else:
                items.append(g)
            continue
        if g.arity == 2:
            a, b = g.qubits
            ia, ib = open_block.get(a), open_block.get(b)
            if ia is not None and ia == ib:
                blk = items[ia]
                m = g.matrix()
                if tuple(blk[0]) != (a, b):
                    swap = Gate("swap", (0, 1)).matrix()
                    m = swap @ m @ swap
                blk[1] = m @ blk[1]
                continue
            close(a)
            close(b)
            items.append([(a, b), g.matrix().astype(complex)])
            open_block[a] = open_block[b] = len(items) - 1
            continue
        for q in g.qubits:
            close(q)
        items.append(g)
    out = []
    for it in items:
        if isinstance(it, Gate):
            out.append(it)
        else:
            (a, b), m = it
            out += kak_gates(m, a, b, drop_identity=True, tol=drop_tol)
    return merge_1q(Circuit(n, out, circuit.output_permutation))


def fused_2q_count(gates) -> int:
    """Two-qubit gate count after structural same-pair fusion (no numerics)."""
    tracker = FusionTracker()
    for g in gates:
        tracker.add(g)
    return tracker.count


class FusionTracker:
    """Counts 2Q gates that survive same-pair fusion as gates stream in."""

    def __init__(self):
        self.count = 0
        self._open: dict[int, tuple] = {}
        self._serial = 0

    def copy(self) -> "FusionTracker":
        t = FusionTracker()
        t.count, t._open, t._serial = self.count, dict(self._open), self._serial
        return t

    def add(self, g: Gate) -> None:
        if g.arity == 1:
            return
        if g.arity == 2:
            a, b = g.qubits
            key_a, key_b = self._open.get(a), self._open.get(b)
            if key_a is not None and key_a == key_b:
                return
            self._serial += 1
            self._open[a] = self._open[b] = (frozenset((a, b)), self._serial)
            self.count += 1
            return
        for q in g.qubits:
            self._open.pop(q, None)


# ---------------------------------------------------------------- partitioning


@dataclass
class Block:
    qubits: tuple[int, ...]
    gates: list[int]
    count2q: int = 0


@dataclass
class Partition:
    blocks: list[Block]
    w: int

    def counts(self) -> list[int]:
        return [b.count2q for b in self.blocks if b.count2q > 0]


def partition_blocks(circuit: Circuit, w: int = DEFAULT_W) -> Partition:
    """Greedy forward scan keeping one open block of support at most ``w``.

    A multi-qubit gate joins the open block when the union of supports fits in
    ``w`` qubits, otherwise the block closes and a new one opens on the gate.
    Single-qubit gates outside the open support are deferred: they commute with
    the open block and are either pulled into it (when a later gate extends the
    support to their qubit) or emitted as 1Q-only blocks when it closes.
    """
    if w < 2:
        raise ContractError("w must be at least 2")
    blocks: list[Block] = []
    support: list[int] = []
    members: list[int] = []
    deferred: list[int] = []
    gates = circuit.gates

    def close():
        nonlocal support, members, deferred
        if members:
            blocks.append(Block(tuple(sorted(support)), members,
                                sum(1 for i in members if gates[i].arity >= 2)))
        for i in deferred:
            blocks.append(Block(gates[i].qubits, [i], 0))
        support, members, deferred = [], [], []

    for i, g in enumerate(gates):
        if g.arity > w:
            raise ContractError(f"{g} is wider than the partition width {w}")
        if g.arity == 1:
            if g.qubits[0] in support:
                members.append(i)
            else:
                deferred.append(i)
            continue
        new_support = sorted(set(support) | set(g.qubits))
        if len(new_support) > w:
            close()
            new_support = list(g.qubits)
        # deferred 1Q gates on qubits entering the support precede this gate
        keep = []
        for j in deferred:
            if gates[j].qubits[0] in new_support:
                members.append(j)
            else:
                keep.append(j)
        deferred = keep
        support = new_support
        members.append(i)
    close()
    return Partition(blocks, w)


def partition_order(partition: Partition) -> list[int]:
    return [i for b in partition.blocks for i in b.gates]


def compactness(partition: Partition, m_th: int = DEFAULT_MTH) -> float:
    """Fraction of 2Q gates that sit in blocks with more than ``m_th`` of them."""
    total = sum(b.count2q for b in partition.blocks)
    if total == 0:
        return 0.0
    return sum(b.count2q for b in partition.blocks if b.count2q > m_th) / total


def _block_circuit(circuit: Circuit, block: Block) -> tuple[Circuit, dict[int, int]]:
    local = {q: i for i, q in enumerate(block.qubits)}
    gates = [circuit.gates[i].remap(local) for i in block.gates]
    return Circuit(len(block.qubits), gates), local


# ---------------------------------------------------------------- DAG compacting


def _exchange_candidates(dag: CircuitDAG):
    gates = dag.gates
    for i, g1 in enumerate(gates):
        if g1.arity != 2:
            continue
        for j in sorted(dag.succs[i]):
            g2 = gates[j]
            if g2.arity != 2 or len(set(g1.qubits) & set(g2.qubits)) != 1:
                continue
            yield i, j


def _reachable_without_edge(dag: CircuitDAG, i: int, j: int) -> bool:
    stack = [k for k in dag.succs[i] if k != j]
    seen = set(stack)
    while stack:
        k = stack.pop()
        if k == j:
            return True
        for s in dag.succs[k]:
            if s not in seen and s <= j:
                seen.add(s)
                stack.append(s)
    return False


def _ancestors(dag: CircuitDAG, j: int) -> set[int]:
    out, stack = set(), list(dag.preds[j])
    while stack:
        k = stack.pop()
        if k not in out:
            out.add(k)
            stack.extend(dag.preds[k])
    return out


def _apply_exchange(circuit: Circuit, dag: CircuitDAG, i: int, j: int, new2: Gate, new1: Gate) -> Circuit:
    anc = _ancestors(dag, j)
    gates = circuit.gates
    between = range(i + 1, j)
    head = list(gates[:i]) + [gates[k] for k in between if k in anc]
    swapped = kak_gates(new2.unitary, *new2.qubits) + kak_gates(new1.unitary, *new1.qubits)
    tail = [gates[k] for k in between if k not in anc] + list(gates[j + 1:])
    return circuit.with_gates(head + swapped + tail)


def dag_compact(circuit: Circuit, w: int = DEFAULT_W, m_th: int = DEFAULT_MTH,
                eps: float = 1e-8, sweeps: int = COMPACT_SWEEPS, restarts: int = 4) -> Circuit:
    """Exchange approximately commuting neighbor pairs when that raises compactness."""
    current = merge_1q(circuit)
    score = compactness(partition_blocks(current, w), m_th)
    moves = 0
    for _ in range(sweeps):
        improved = False
        dag = CircuitDAG(current)
        tried = set()
        for i, j in list(_exchange_candidates(dag)):
            if (i, j) in tried or _reachable_without_edge(dag, i, j):
                continue
            tried.add((i, j))
            g1, g2 = current.gates[i], current.gates[j]
            trial_order = _structural_swap(current, dag, i, j)
            trial_score = compactness(partition_blocks(trial_order, w), m_th)
            if trial_score <= score:
                continue
            res = exchange_pair(g1, g2, eps=eps, restarts=restarts)
            if res is None:
                continue
            candidate = merge_1q(_apply_exchange(current, dag, i, j, *res))
            new_score = compactness(partition_blocks(candidate, w), m_th)
            if new_score > score:
                current, score = candidate, new_score
                moves += 1
                improved = True
                break
        if not improved:
            break
    log.debug("dag_compact: %d moves, compactness %.3f", moves, score)
    return current


def _structural_swap(circuit: Circuit, dag: CircuitDAG, i: int, j: int) -> Circuit:
    """The circuit with gates i and j exchanged in place (structure only, for scoring)."""
    g1, g2 = circuit.gates[i], circuit.gates[j]
    placeholder2 = Gate("unitary", g2.qubits, unitary=np.eye(4))
    placeholder1 = Gate("unitary", g1.qubits, unitary=np.eye(4))
    anc = _ancestors(dag, j)
    gates = circuit.gates
    between = range(i + 1, j)
    head = list(gates[:i]) + [gates[k] for k in between if k in anc]
    tail = [gates[k] for k in between if k not in anc] + list(gates[j + 1:])
    return circuit.with_gates(head + [placeholder2, placeholder1] + tail)


# ---------------------------------------------------------------- hierarchical synthesis


@dataclass
class PipelineConfig:
    mode: str = "full"
    w: int = DEFAULT_W
    m_th: int = DEFAULT_MTH
    r: float = DEFAULT_R
    eps: float = 1e-10
    amp_max: float | None = None
    restarts: int = 12
    compact: bool = True
    verify: bool = True
    library: "TemplateLibrary | None" = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("red", "full"):
            raise ContractError("mode must be 'red' or 'full'")
        if self.w not in (2, 3):
            raise ContractError("w must be 2 or 3")
        if self.m_th < 1 or self.r < 0:
            raise ContractError("m_th >= 1 and r >= 0 required")


def hierarchical_synthesis(circuit: Circuit, cfg: PipelineConfig | None = None) -> Circuit:
    """Fuse to SU(4)s, partition into w-qubit blocks, resynthesize blocks above ``m_th``."""
    cfg = cfg or PipelineConfig()
    fused = fuse_2q_blocks(circuit)
    if cfg.compact and cfg.w == 3:
        fused = dag_compact(fused, cfg.w, cfg.m_th)
    part = partition_blocks(fused, cfg.w)
    out: list[Gate] = []
    for block in part.blocks:
        sub, local = _block_circuit(fused, block)
        inv = {i: q for q, i in local.items()}
        if block.count2q > cfg.m_th and len(block.qubits) >= 2:
            target = unitary_of(sub)
            res = approx_synthesize(target, w=len(block.qubits), eps=cfg.eps,
                                    max_count=block.count2q - 1, restarts=cfg.restarts,
                                    seed=cfg.seed, descending=True)
            if res.success and res.gate_count < block.count2q:
                log.debug("block %s: %d -> %d", block.qubits, block.count2q, res.gate_count)
                out += [g.remap(inv) for g in res.circuit.gates]
                continue
        out += [fused.gates[i] for i in block.gates]
    return fuse_2q_blocks(Circuit(circuit.n_qubits, out, fused.output_permutation))


# ---------------------------------------------------------------- templates


def structural_signature(circuit: Circuit) -> tuple[str, tuple[int, ...]]:
    """Canonical text of a small circuit under qubit relabeling, and the relabeling used.

    ``relabel[q]`` is the canonical label of qubit ``q``.
    """
    best = None
    for perm in itertools.permutations(range(circuit.n_qubits)):
        text = ";".join(
            g.kind + ("(" + ",".join(f"{p:.10g}" for p in g.params) + ")" if g.params else "")
            + ":" + ",".join(str(perm[q]) for q in g.qubits) for g in circuit.gates)
        if best is None or text < best[0]:
            best = (text, perm)
    return best


@dataclass
class Template:
    circuit: Circuit
    variant: str
    infidelity: float

    def coords(self) -> list[tuple[float, float, float]]:
        return [tuple(g.coordinate()) for g in self.circuit.gates if g.arity == 2]

    def to_json(self) -> dict:
        return {"variant": self.variant, "circuit": emit_qasm(self.circuit),
                "coords": [list(c) for c in self.coords()], "infidelity": self.infidelity}

    @classmethod
    def from_json(cls, doc) -> "Template":
        return cls(parse_qasm(doc["circuit"]), doc.get("variant", "base"), float(doc["infidelity"]))


@dataclass
class TemplateLibrary:
    """Signature -> list of verified variant templates (canonical qubit labels)."""

    entries: dict[str, list[Template]] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)
    eps: float = 1e-10

    def __len__(self):
        return len(self.entries)

    def coordinates(self) -> list[tuple[float, float, float]]:
        return [c for vs in self.entries.values() for t in vs for c in t.coords()]

    def lookup(self, ir: Circuit):
        sig, perm = structural_signature(ir)
        return self.entries.get(sig), perm, sig

    def add(self, ir: Circuit, restarts: int = 12, seed: int = 0) -> list[Template]:
        sig, perm = structural_signature(ir)
        if sig in self.entries:
            return self.entries[sig]
        canon = Circuit(ir.n_qubits, [g.remap(perm) for g in ir.gates])
        variants = synthesize_template(canon, self.eps, restarts, seed)
        self.entries[sig] = variants
        self.sources[sig] = emit_qasm(canon)
        return variants

    def save(self, path) -> None:
        doc = [{"signature": sig, "source": self.sources.get(sig, ""),
                "variants": [t.to_json() for t in vs]} for sig, vs in self.entries.items()]
        Path(path).write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, path) -> "TemplateLibrary":
        doc = json.loads(Path(path).read_text())
        lib = cls()
        for e in doc:
            lib.entries[e["signature"]] = [Template.from_json(v) for v in e["variants"]]
            lib.sources[e["signature"]] = e.get("source", "")
        return lib

    def verify(self) -> float:
        """Worst template infidelity against its stored source (recomputed)."""
        worst = 0.0
        for sig, variants in self.entries.items():
            src = self.sources.get(sig)
            if not src:
                continue
            target = unitary_of(parse_qasm(src))
            for t in variants:
                worst = max(worst, infidelity(target, unitary_of(t.circuit)))
        return worst


def synthesize_template(ir: Circuit, eps: float = 1e-10, restarts: int = 12, seed: int = 0) -> list[Template]:
    """Minimal-count template of a 3Q IR plus its equivalent-circuit-class variants.

    The exactly fused gate-level expansion competes with numeric synthesis; on
    equal counts the fused one wins because it reuses few distinct SU(4)s.
    """
    n = ir.n_qubits
    target = unitary_of(ir)
    exact = fuse_2q_blocks(expand_ccx(ir))
    best = exact
    if exact.count2q() > 0:
        res = approx_synthesize(target, w=n, eps=eps, max_count=exact.count2q() - 1,
                                restarts=restarts, seed=seed)
        if res.success and res.gate_count < exact.count2q():
            best = res.circuit
    variants = [Template(best, "base", infidelity(target, unitary_of(best)))]
    if best.count2q() == 0:
        return variants
    # self-inverse: the reversed (adjoint) template implements the same unitary
    if np.allclose(target @ target, np.eye(2 ** n) * (target @ target)[0, 0], atol=1e-9):
        rev = reverse_circuit(best)
        variants.append(Template(rev, "reversed", infidelity(target, unitary_of(rev))))
    # control permutation: relabelings leaving the unitary invariant
    for a, b in itertools.combinations(range(n), 2):
        perm = list(range(n))
        perm[a], perm[b] = b, a
        relabeled = Circuit(n, [g.remap(perm) for g in ir.gates])
        if infidelity(target, unitary_of(relabeled)) < 1e-12:
            for base in list(variants):
                if "swap" in base.variant:
                    continue
                c = Circuit(n, [g.remap(perm) for g in base.circuit.gates])
                variants.append(Template(c, f"{base.variant}+swap{a}{b}", infidelity(target, unitary_of(c))))
    bad = [t for t in variants if t.infidelity > max(eps, 1e-9)]
    if bad:
        raise ContractError(f"template variant {bad[0].variant} failed verification")
    return variants


def reverse_circuit(circuit: Circuit) -> Circuit:
    """Adjoint circuit expressed with U3 and canonical Can gates."""
    gates = []
    for g in reversed(circuit.gates):
        m = g.matrix().conj().T
        if g.arity == 1:
            gates.append(Gate("u3", g.qubits, _u3p(m)))
        elif g.arity == 2:
            gates += kak_gates(m, *g.qubits)
        else:
            gates.append(Gate("unitary", g.qubits, unitary=m))
    return merge_1q(Circuit(circuit.n_qubits, gates))


def _u3p(m):
    from .circuit import u3_params
    return u3_params(m)


_CCX_EXPANSION = (
    ("h", (2,)), ("cx", (1, 2)), ("tdg", (2,)), ("cx", (0, 2)), ("t", (2,)), ("cx", (1, 2)),
    ("tdg", (2,)), ("cx", (0, 2)), ("t", (1,)), ("t", (2,)), ("h", (2,)), ("cx", (0, 1)),
    ("t", (0,)), ("tdg", (1,)), ("cx", (0, 1)),
)


def expand_ccx(circuit: Circuit) -> Circuit:
    """Replace every CCX by the standard 6-CNOT, T-depth-3 network."""
    out = []
    for g in circuit.gates:
        if g.kind != "ccx":
            out.append(g)
            continue
        q = g.qubits
        out += [Gate(k, tuple(q[i] for i in idx)) for k, idx in _CCX_EXPANSION]
    return circuit.with_gates(out)


def build_template_library(corpus, eps: float = 1e-10, restarts: int = 12, seed: int = 0,
                           library: TemplateLibrary | None = None) -> TemplateLibrary:
    lib = library if library is not None else TemplateLibrary(eps=eps)
    for ir in corpus:
        lib.add(ir, restarts=restarts, seed=seed)
    return lib


def extract_irs(circuit: Circuit) -> list[tuple[Block, Circuit]]:
    """3Q IR instances: partition blocks (w=3) containing a CCX, as local circuits."""
    part = partition_blocks(circuit, 3)
    out = []
    for b in part.blocks:
        if any(circuit.gates[i].kind == "ccx" for i in b.gates):
            sub, _ = _block_circuit(circuit, b)
            out.append((b, sub))
    return out


def assemble(circuit: Circuit, library: TemplateLibrary, restarts: int = 12, seed: int = 0) -> Circuit:
    """Replace each CCX-bearing 3Q IR by a library template.

    Among a template's variants the one adding the fewest 2Q gates after
    same-pair fusion is chosen, looking one template ahead.
    """
    part = partition_blocks(circuit, 3)
    chunks = []  # list of (block qubits, [candidate gate lists])
    for b in part.blocks:
        gates = [circuit.gates[i] for i in b.gates]
        if not any(g.kind == "ccx" for g in gates):
            chunks.append([gates])
            continue
        sub, local = _block_circuit(circuit, b)
        variants, perm, _ = library.lookup(sub)
        if variants is None:
            variants = library.add(sub, restarts=restarts, seed=seed)
            _, perm = structural_signature(sub)
        # canonical label c -> local qubit -> global qubit
        inv_perm = {c: q for q, c in enumerate(perm)}
        to_global = {c: b.qubits[inv_perm[c]] for c in range(len(perm))}
        chunks.append([[g.remap(to_global) for g in t.circuit.gates] for t in variants])
    tracker = FusionTracker()
    out = []
    for k, options in enumerate(chunks):
        if len(options) == 1:
            choice = options[0]
        else:
            nxt = chunks[k + 1] if k + 1 < len(chunks) else [[]]
            best = None
            for opt in options:
                t = tracker.copy()
                for g in opt:
                    t.add(g)
                ahead = min(_added(t, o) for o in nxt)
                score = t.count - tracker.count + ahead
                if best is None or score < best[0]:
                    best = (score, opt)
            choice = best[1]
        for g in choice:
            tracker.add(g)
        out += choice
    return Circuit(circuit.n_qubits, out, circuit.output_permutation)


def _added(tracker: FusionTracker, gates) -> int:
    t = tracker.copy()
    for g in gates:
        t.add(g)
    return t.count - tracker.count


# ---------------------------------------------------------------- mirroring


def _needs_mirror(g: Gate, r: float, nf, amp_max) -> bool:
    c = g.coordinate()
    if c.l1() < r:
        return True
    if nf is not None and amp_max is not None:
        from .scheme import AmplitudeExceeded, synthesize_pulse
        try:
            synthesize_pulse(g.matrix(), nf, amp_max=amp_max)
        except AmplitudeExceeded:
            return True
    return False


def mirror_near_identity(circuit: Circuit, r: float = DEFAULT_R, nf=None,
                         amp_max: float | None = None) -> tuple[Circuit, tuple[int, ...]]:
    """Replace near-identity Can gates by their mirrors ``SWAP . Can`` and relabel wires.

    Returns the new circuit (carrying the accumulated output permutation) and
    that permutation.
    """
    n = circuit.n_qubits
    where = list(range(n))  # content of original wire w now lives on wire where[w]
    out = []
    for g in circuit.gates:
        wires = tuple(where[q] for q in g.qubits)
        if g.kind == "can" and _needs_mirror(g, r, nf, amp_max):
            a, b = wires
            x, y, z = g.params
            out += kak_gates(can(x + QUARTER, y + QUARTER, z + QUARTER), a, b)
            qa, qb = g.qubits
            where[qa], where[qb] = where[qb], where[qa]
            continue
        out.append(g.remap({q: w for q, w in zip(g.qubits, wires)}))
    perm = tuple(where[p] for p in circuit.output_permutation)
    return merge_1q(Circuit(n, out, perm)), perm


# ---------------------------------------------------------------- accounting


def count_distinct_su4(circuit: Circuit, tol: float = 1e-6) -> int:
    """Number of clusters of 2Q Weyl coordinates (first-seen representatives, max-norm tol)."""
    reps: list[WeylCoordinate] = []
    for g in circuit.gates:
        if g.arity != 2:
            continue
        c = g.coordinate()
        if c.l1() < tol:
            continue
        if not any(coordinate_distance(c, r) <= tol for r in reps):
            reps.append(c)
    return len(reps)


@dataclass
class PipelineResult:
    circuit: Circuit
    metrics_in: Metrics
    metrics_out: Metrics
    permutation: tuple[int, ...]
    infidelity: float | None


def pipeline(circuit: Circuit, cfg: PipelineConfig | None = None, nf=None) -> PipelineResult:
    """Red: templates -> fuse -> mirror. Full: Red plus DAG compacting and hierarchical synthesis."""
    cfg = cfg or PipelineConfig()
    m_in = metrics(expand_ccx(circuit), None)
    work = circuit
    if any(g.kind == "ccx" for g in work.gates):
        lib = cfg.library if cfg.library is not None else TemplateLibrary(eps=cfg.eps)
        work = assemble(work, lib, restarts=cfg.restarts, seed=cfg.seed)
    work = fuse_2q_blocks(work)
    if cfg.mode == "full":
        work = hierarchical_synthesis(work, cfg)
    work, perm = mirror_near_identity(work, cfg.r, nf, cfg.amp_max)
    m_out = metrics(work, nf)
    err = None
    if cfg.verify and circuit.n_qubits <= MAX_UNITARY_QUBITS:
        err = infidelity(unitary_of(circuit), unitary_of(work))
    return PipelineResult(work, m_in, m_out, perm, err)


__all__ = [
    "fuse_2q_blocks", "partition_blocks", "compactness", "dag_compact", "hierarchical_synthesis",
    "TemplateLibrary", "Template", "build_template_library", "assemble", "mirror_near_identity",
    "count_distinct_su4", "pipeline", "PipelineConfig", "PipelineResult", "Partition", "Block",
    "structural_signature", "partition_order", "expand_ccx", "reverse_circuit", "fused_2q_count", "extract_irs",
]
