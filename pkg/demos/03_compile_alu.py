"""Red and Full compilation of a small arithmetic circuit with two Toffolis."""

from reqisc.circuit import Circuit, Gate
from reqisc.hamiltonian import normal_form, preset
from reqisc.passes import PipelineConfig, TemplateLibrary, compactness, partition_blocks, pipeline

gates = [("cx", (3, 4)), ("ccx", (0, 1, 2)), ("cx", (2, 1)), ("cx", (0, 2)), ("cx", (1, 0)),
         ("cx", (2, 4)), ("ccx", (2, 3, 4)), ("cx", (3, 4)), ("cx", (4, 2))]
alu = Circuit(5, [Gate(k, q) for k, q in gates])
nf = normal_form(preset("xy"))
lib = TemplateLibrary()

for mode in ("red", "full"):
    res = pipeline(alu, PipelineConfig(mode=mode, restarts=2, library=lib), nf)
    m0, m1 = res.metrics_in, res.metrics_out
    blocks = partition_blocks(res.circuit, 3)
    print(f"{mode:4s}: #2Q {m0.count2q} -> {m1.count2q}, depth2Q {m0.depth2q} -> {m1.depth2q}, "
          f"distinct SU(4) {m1.distinct_su4}, infidelity {res.infidelity:.1e}")
    print(f"      blocks {blocks.counts()}, compactness {compactness(blocks):.2f}, "
          f"output permutation {res.permutation}")
print(f"template library holds {len(lib)} entries")
