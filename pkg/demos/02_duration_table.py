"""Average pulse duration of Haar-random SU(4) gates against fixed basis gates."""

from reqisc.bench import basis_gate_table, basis_table_notes, haar_duration_stats
from reqisc.hamiltonian import normal_form, preset

for name in ("xy", "xx"):
    nf = normal_form(preset(name))
    stats = haar_duration_stats(nf, 20_000, seed=1, name=name)
    shares = ", ".join(f"{k} {v:.2f}" for k, v in stats.subscheme_shares.items())
    print(f"{name}: SU(4) mean {stats.mean_tau:.3f} +- {stats.stderr_tau:.3f}  ({shares})")
    table = basis_gate_table(nf)
    for gate, row in table.items():
        print(f"   {gate:6s} single {row['single']:.3f}  x{row['count']:.2f} per SU(4) = {row['avg']:.3f}")
    for note in basis_table_notes(table, name):
        print("   note:", note)
