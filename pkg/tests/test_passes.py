import numpy as np
import pytest
from hypothesis import given, strategies as st

from corpus import random_circuit
from reqisc.circuit import Circuit, Gate, can_gate, equivalence_error, kak_gates, unitary_of
from reqisc.numerics import ContractError
from reqisc.passes import (
    FusionTracker, PipelineConfig, TemplateLibrary, assemble, compactness, count_distinct_su4,
    dag_compact, expand_ccx, extract_irs, fuse_2q_blocks, fused_2q_count, hierarchical_synthesis,
    mirror_near_identity, partition_blocks, partition_order, pipeline, reverse_circuit,
    structural_signature, synthesize_template,
)
from reqisc.synth import infidelity, merge_1q
from reqisc.weyl import QUARTER, random_su4


def su4(rng, a, b):
    return kak_gates(random_su4(rng), a, b)


def test_fusion_merges_same_pair_runs():
    c = Circuit(3, [Gate("cx", (0, 1)), Gate("h", (0,)), Gate("cx", (1, 0)), Gate("cz", (1, 2)),
                    Gate("cx", (0, 1))])
    f = fuse_2q_blocks(c)
    assert f.count2q() == 3
    assert all(g.kind in ("can", "u3") for g in f.gates)
    assert equivalence_error(f, c) < 1e-12


def test_fusion_drops_identity_products():
    c = Circuit(2, [Gate("cx", (0, 1)), Gate("cx", (0, 1))])
    assert fuse_2q_blocks(c).count2q() == 0


@given(st.integers(0, 10_000))
def test_fusion_preserves_semantics(seed):
    c = random_circuit(seed, 4, 8)
    f = fuse_2q_blocks(c)
    assert equivalence_error(f, c) < 1e-10
    assert f.count2q() <= c.count2q()
    # the structural count cannot see products that cancel to the identity
    assert f.count2q() <= fused_2q_count(c.gates)


def test_fusion_tracker_matches_fusion(rng):
    c = random_circuit(rng, 4, 12)
    t = FusionTracker()
    for g in c.gates:
        t.add(g)
    assert t.count == fused_2q_count(c.gates) >= fuse_2q_blocks(c).count2q()
    t2 = t.copy()
    t2.add(Gate("cx", (0, 3)))
    assert t2.count >= t.count


def test_partition_respects_width_and_covers(rng):
    c = fuse_2q_blocks(random_circuit(rng, 5, 15))
    p = partition_blocks(c, 3)
    assert sorted(partition_order(p)) == list(range(len(c.gates)))
    assert all(len(b.qubits) <= 3 for b in p.blocks)
    # the block order is a valid schedule
    assert equivalence_error(c.with_gates([c.gates[i] for i in partition_order(p)]), c) < 1e-10


def test_partition_rejects_small_width():
    with pytest.raises(ContractError):
        partition_blocks(Circuit(2), 1)


def test_compactness_definition():
    c = Circuit(4, [Gate("cx", (0, 1)), Gate("cx", (1, 2))] * 3 + [Gate("cx", (2, 3))])
    p = partition_blocks(c, 3)
    assert p.counts() == [6, 1]
    assert compactness(p, 4) == pytest.approx(6 / 7)
    assert compactness(partition_blocks(Circuit(2), 3)) == 0.0


def test_dag_compact_raises_compactness():
    rng = np.random.default_rng(0)
    gs = (su4(rng, 3, 4) + su4(rng, 2, 3) + [can_gate((0.3, 0, 0), 1, 2), can_gate((0.2, 0, 0), 2, 3)]
          + su4(rng, 0, 1) + su4(rng, 1, 2) + su4(rng, 0, 2) + su4(rng, 0, 1))
    c = merge_1q(Circuit(5, gs))
    before = partition_blocks(c, 3)
    assert before.counts() == [2, 2, 4] and compactness(before) == 0
    d = dag_compact(c, 3, 4)
    after = partition_blocks(d, 3)
    assert compactness(after) > 0.5
    assert equivalence_error(c, d) < 1e-8


def test_hierarchical_synthesis_reduces_dense_block():
    rng = np.random.default_rng(4)
    gates = []
    for _ in range(4):
        gates += su4(rng, 0, 1) + su4(rng, 1, 2)
    # eight SU(4)s on three qubits sit above the generic bound of six
    c = Circuit(3, gates)
    out = hierarchical_synthesis(c, PipelineConfig(restarts=4))
    assert out.count2q() <= 7
    assert equivalence_error(out, c) < 1e-8


def test_structural_signature_relabel_invariant():
    a = Circuit(3, [Gate("ccx", (0, 1, 2)), Gate("cx", (2, 0))])
    b = Circuit(3, [Gate("ccx", (1, 2, 0)), Gate("cx", (0, 1))])
    assert structural_signature(a)[0] == structural_signature(b)[0]
    c = Circuit(3, [Gate("ccx", (0, 1, 2)), Gate("cx", (0, 2))])
    assert structural_signature(a)[0] != structural_signature(c)[0]


def test_expand_ccx_exact():
    c = Circuit(3, [Gate("ccx", (0, 1, 2))])
    e = expand_ccx(c)
    assert e.count2q() == 6 and equivalence_error(e, c) < 1e-12


def test_reverse_circuit_is_adjoint():
    c = Circuit(3, [Gate("ccx", (0, 1, 2)), Gate("cx", (2, 0)), Gate("t", (1,))])
    r = reverse_circuit(c)
    assert infidelity(unitary_of(r), unitary_of(c).conj().T) < 1e-12
    assert r.gates[-1].kind == "unitary" and r.gates[-1].arity == 3


def test_toffoli_template_and_variants():
    ir = Circuit(3, [Gate("ccx", (0, 1, 2))])
    variants = synthesize_template(ir, restarts=4)
    names = {t.variant for t in variants}
    assert "base" in names and len(variants) > 1
    target = unitary_of(ir)
    for t in variants:
        assert infidelity(target, unitary_of(t.circuit)) < 1e-8
        assert t.circuit.count2q() <= 6


def test_library_round_trip(tmp_path):
    lib = TemplateLibrary()
    lib.add(Circuit(3, [Gate("ccx", (0, 1, 2)), Gate("cx", (2, 0))]), restarts=3)
    path = tmp_path / "lib.json"
    lib.save(path)
    again = TemplateLibrary.load(path)
    assert len(again) == 1 and again.verify() < 1e-8
    hit, _, _ = again.lookup(Circuit(3, [Gate("ccx", (1, 2, 0)), Gate("cx", (0, 1))]))
    assert hit is not None


def test_extract_and_assemble():
    c = Circuit(4, [Gate("h", (3,)), Gate("ccx", (0, 1, 2)), Gate("cx", (2, 3)), Gate("ccx", (1, 2, 3))])
    irs = extract_irs(c)
    assert len(irs) >= 2 and all(ir.n_qubits == 3 for _, ir in irs)
    out = assemble(c, TemplateLibrary(), restarts=3)
    assert not any(g.arity == 3 for g in out.gates)
    assert equivalence_error(out, c) < 1e-8
    assert fuse_2q_blocks(out).count2q() <= fuse_2q_blocks(expand_ccx(c)).count2q()


def test_mirror_near_identity_qft():
    n = 5
    gates = []
    for i in range(n):
        gates.append(Gate("h", (i,)))
        for j in range(i + 1, n):
            gates.append(Gate("cp", (j, i), (np.pi / 2 ** (j - i),)))
    q = fuse_2q_blocks(Circuit(n, gates))
    m, perm = mirror_near_identity(q, 0.15)
    assert m.count2q() == q.count2q()
    assert perm != tuple(range(n)) and m.output_permutation == perm
    assert equivalence_error(m, q) < 1e-10
    assert min(g.coordinate().l1() for g in m.gates if g.arity == 2) >= 0.15


def test_mirror_swap_is_free():
    c = Circuit(2, [can_gate((0.01, 0, 0), 0, 1)])
    m, perm = mirror_near_identity(c, 0.15)
    assert perm == (1, 0)
    assert np.allclose(m.two_qubit_gates()[0].coordinate(), (QUARTER, QUARTER, QUARTER - 0.01))


def test_count_distinct_su4():
    c = Circuit(3, [Gate("cx", (0, 1)), Gate("cz", (1, 2)), can_gate((0.3, 0.1, 0), 0, 2),
                    Gate("cx", (2, 0))])
    assert count_distinct_su4(c) == 2
    assert count_distinct_su4(Circuit(2)) == 0


def test_pipeline_red_small():
    c = Circuit(3, [Gate("ccx", (0, 1, 2)), Gate("ccx", (0, 1, 2)), Gate("cx", (1, 2))])
    res = pipeline(c, PipelineConfig(mode="red", restarts=3))
    assert res.infidelity < 1e-8
    assert res.metrics_out.count2q <= 1
    assert res.metrics_in.count2q == 13


def test_pipeline_config_validation():
    with pytest.raises(ContractError):
        PipelineConfig(mode="fast")
    with pytest.raises(ContractError):
        PipelineConfig(w=4)
