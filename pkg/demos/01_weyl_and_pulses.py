"""Weyl coordinates of familiar gates and the time-optimal pulses that realize them."""

import numpy as np

from reqisc.hamiltonian import normal_form, preset
from reqisc.scheme import family_sweep, synthesize_pulse, verify_solution
from reqisc.weyl import can, canonical_decompose, mirror, random_su4

CX = np.eye(4)[[0, 1, 3, 2]].astype(complex)
ISWAP = can(np.pi / 4, np.pi / 4, 0)
SQISW = can(np.pi / 8, np.pi / 8, 0)

# every two-qubit gate is local gates around one canonical gate Can(x, y, z)
for name, u in [("CNOT", CX), ("iSWAP", ISWAP), ("SQiSW", SQISW), ("Haar", random_su4(7))]:
    d = canonical_decompose(u)
    print(f"{name:6s} coordinate {np.round(d.coordinate, 4)}  "
          f"reconstruction error {np.abs(d.reconstruct() - u).max():.1e}")

# SWAP . Can(c) is Can(mirror(c)) up to local gates
print("mirror of CNOT:", np.round(mirror((np.pi / 4, 0, 0)), 4))

# pulses under the XY coupling (g = 1): duration, subscheme and drives
xy = preset("xy")
nf = normal_form(xy)
for name, u in [("CNOT", CX), ("iSWAP", ISWAP), ("SQiSW", SQISW), ("Haar", random_su4(7))]:
    sol = synthesize_pulse(u, nf)
    print(f"{name:6s} tau={sol.tau:.4f} {sol.subscheme:8s} A1={sol.a1_amp:+.4f} "
          f"A2={sol.a2_amp:+.4f} delta={sol.delta:+.4f} residual={verify_solution(sol, u, xy):.1e}")

# drive amplitudes along the CNOT family Can(s pi/4, 0, 0)
print("s, A1, A2, delta, tau")
for row in family_sweep("cnot", np.linspace(0, 1, 5), nf):
    print(", ".join(f"{v:+.4f}" for v in row))
