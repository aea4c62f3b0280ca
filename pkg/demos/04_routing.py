"""SABRE routing with and without SWAP absorption into mirrored gates."""

import numpy as np

from reqisc.circuit import Circuit, Gate, kak_gates
from reqisc.routing import mirroring_sabre, routing_report, sabre_route, verify_routing
from reqisc.weyl import random_su4

# two gates from qubit 0: on a chain the second one needs a SWAP
fig7 = Circuit(3, [Gate("cx", (0, 1)), Gate("cx", (0, 2))])
for route in (sabre_route, mirroring_sabre):
    res = route(fig7, "chain:3")
    rep = routing_report(fig7, res)
    print(f"{route.__name__:16s} overhead {rep['overhead_ratio']:.2f} swaps {rep['swaps']} "
          f"absorbed {rep['absorptions']} final layout {rep['final_permutation']}")

rng = np.random.default_rng(0)
totals = {"sabre": 0, "mirroring": 0}
for s in range(30):
    gates = []
    for _ in range(15):
        a, b = (int(v) for v in rng.choice(6, 2, replace=False))
        gates += kak_gates(random_su4(rng), a, b)
    c = Circuit(6, gates)
    for key, route in (("sabre", sabre_route), ("mirroring", mirroring_sabre)):
        res = route(c, "grid:2x3", seed=s)
        assert verify_routing(c, res, "grid:2x3") < 1e-8
        totals[key] += res.circuit.count2q() - c.count2q()
print("inserted 2Q gates over 30 random circuits on grid:2x3:", totals)
