"""``reqisc`` command line: compile, route, pulse, bench duration, bench sweep, verify."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import (
    RANDOM_DISTS, basis_gate_table, basis_table_notes, error_proxy, haar_duration_stats,
    random_normal_form, report, sweep_csv,
)
from .circuit import (
    MAX_STATEVECTOR_QUBITS, MAX_UNITARY_QUBITS, Circuit, Gate, emit_qasm, equivalence_error,
    infidelity, parse_qasm, unitary_of,
)
from .hamiltonian import normal_form, resolve_coupling
from .numerics import ContractError
from .passes import PipelineConfig, TemplateLibrary, pipeline
from .routing import build_graph, mirroring_sabre, routing_report, sabre_route, verify_routing
from .scheme import FAMILIES, AmplitudeExceeded, synthesize_pulse, verify_solution
from .weyl import QUARTER, can

VERIFY_TOL = 1e-6
PULSE_TOL = 1e-8

_ISWAP = np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex)
_SQISW = np.array([[1, 0, 0, 0], [0, 1 / np.sqrt(2), 1j / np.sqrt(2), 0],
                   [0, 1j / np.sqrt(2), 1 / np.sqrt(2), 0], [0, 0, 0, 1]], dtype=complex)


def _named_gate(spec: str) -> np.ndarray:
    spec = spec.lower()
    if spec.startswith("can:"):
        x, y, z = (float(v) for v in spec[4:].split(","))
        return can(x, y, z)
    table = {"cnot": Gate("cx", (0, 1)).matrix(), "cx": Gate("cx", (0, 1)).matrix(),
             "swap": Gate("swap", (0, 1)).matrix(), "iswap": _ISWAP, "sqisw": _SQISW,
             "b": can(QUARTER, QUARTER / 2, 0.0)}
    if spec not in table:
        raise ContractError(f"unknown gate {spec!r}")
    return table[spec]


def _coupling(args):
    """``(name, NormalForm or None)`` from --coupling / --g / --dist."""
    name = getattr(args, "coupling", None)
    if name in (None, "cnot", "none"):
        return "cnot", None
    if name == "random":
        nf = random_normal_form(args.seed, args.dist)
        return f"random:{args.dist}", nf
    return name, normal_form(resolve_coupling(name, args.g))


def _emit(args, doc: dict, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(doc, indent=2, default=_jsonable))
    if args.json:
        print(json.dumps(doc, indent=2, default=_jsonable))
    else:
        print(text)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v):
            return [[[float(z.real), float(z.imag)] for z in row] for row in v]
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"not serializable: {type(v)}")


def _read_circuit(path: str) -> Circuit:
    return parse_qasm(Path(path).read_text())


def _equivalence(a: Circuit, b: Circuit, seed: int) -> float | None:
    if a.n_qubits <= MAX_UNITARY_QUBITS:
        return infidelity(unitary_of(a), unitary_of(b))
    if a.n_qubits <= MAX_STATEVECTOR_QUBITS:
        return equivalence_error(a, b, rng=seed)
    return None


# ---------------------------------------------------------------- subcommands


def cmd_compile(args) -> int:
    circ = _read_circuit(args.input)
    name, nf = _coupling(args)
    existing = bool(args.templates) and Path(args.templates).exists()
    lib = TemplateLibrary.load(args.templates) if existing else TemplateLibrary(eps=args.eps)
    size0 = len(lib)
    cfg = PipelineConfig(mode=args.mode, w=args.w, m_th=args.mth, r=args.r, eps=args.eps,
                         amp_max=args.amp_max, restarts=args.restarts, library=lib, seed=args.seed,
                         verify=False)
    res = pipeline(circ, cfg, nf)
    err = _equivalence(circ, res.circuit, args.seed)
    ok = err is None or err < VERIFY_TOL
    if args.templates and len(lib) > size0:
        lib.save(args.templates)
    if args.emit:
        Path(args.emit).write_text(emit_qasm(res.circuit))
    doc = report("compile", {"input": args.input, "mode": args.mode, "coupling": name, "w": args.w,
                             "m_th": args.mth, "r": args.r, "eps": args.eps, "seed": args.seed},
                 {"qasm": args.emit, "permutation": list(res.permutation)},
                 {"before": res.metrics_in.to_dict(), "after": res.metrics_out.to_dict()},
                 verification={"infidelity": err, "passed": ok},
                 error_proxy=error_proxy(res.circuit, nf))
    m0, m1 = res.metrics_in, res.metrics_out
    _emit(args, doc, f"#2Q {m0.count2q} -> {m1.count2q}, depth2Q {m0.depth2q} -> {m1.depth2q}, "
                     f"duration {m0.duration:.3f} -> {m1.duration:.3f}, distinct SU(4) {m1.distinct_su4}, "
                     f"verify {'ok' if ok else 'FAILED'} ({err})")
    return 0 if ok else 1


def cmd_route(args) -> int:
    circ = _read_circuit(args.input)
    graph = build_graph(args.topology)
    route = mirroring_sabre if args.algo == "mirroring" else sabre_route
    res = route(circ, graph, W=args.W, ext_size=args.ext, seed=args.seed)
    rep = routing_report(circ, res)
    err = None
    if graph.n_phys <= MAX_STATEVECTOR_QUBITS:
        err = verify_routing(circ, res, graph, rng=args.seed)
    ok = err is None or err < PULSE_TOL
    if args.emit:
        Path(args.emit).write_text(emit_qasm(res.circuit))
    doc = report("route", {"input": args.input, "topology": args.topology, "algo": args.algo,
                           "W": args.W, "ext": args.ext, "seed": args.seed},
                 {"qasm": args.emit}, routing=rep, verification={"infidelity": err, "passed": ok})
    _emit(args, doc, f"overhead {rep['overhead_ratio']:.3f}, swaps {rep['swaps']}, "
                     f"absorptions {rep['absorptions']}, verify {'ok' if ok else 'FAILED'}")
    return 0 if ok else 1


def cmd_pulse(args) -> int:
    u = _named_gate(args.gate)
    name, nf = _coupling(args)
    if nf is None:
        raise ContractError("pulse needs a coupling Hamiltonian")
    try:
        sol = synthesize_pulse(u, nf, amp_max=args.amp_max)
        exceeded = False
    except AmplitudeExceeded as exc:
        sol, exceeded = exc.solution, True
    residual = verify_solution(sol, u, nf)
    ok = residual < PULSE_TOL and not exceeded
    doc = report("pulse", {"gate": args.gate, "coupling": name, "g": args.g, "amp_max": args.amp_max},
                 {"subscheme": sol.subscheme, "tau": sol.tau, "omega1": sol.omega1, "omega2": sol.omega2,
                  "delta": sol.delta, "A1": sol.a1_amp, "A2": sol.a2_amp,
                  "coordinate": list(sol.coordinate), "reflected": sol.reflected,
                  "corrections": {"a1": sol.corr_a1, "a2": sol.corr_a2, "b1": sol.corr_b1, "b2": sol.corr_b2},
                  "residual": residual, "amplitude_exceeded": exceeded})
    _emit(args, doc, f"{sol.subscheme}: tau={sol.tau:.6f} A1={sol.a1_amp:.6f} A2={sol.a2_amp:.6f} "
                     f"delta={sol.delta:.6f} residual={residual:.2e}"
                     + (" (amplitude cap exceeded)" if exceeded else ""))
    return 0 if ok else 1


def cmd_bench_duration(args) -> int:
    name, nf = _coupling(args)
    if nf is None:
        raise ContractError("bench duration needs a coupling Hamiltonian")
    stats = haar_duration_stats(nf, args.samples, args.seed, name=name,
                                dist=args.dist if args.coupling == "random" else None)
    table = basis_gate_table(nf)
    doc = report("bench_duration", {"coupling": name, "samples": args.samples, "seed": args.seed},
                 {"stats": stats.to_dict(), "basis_gates": table, "notes": basis_table_notes(table, name)})
    lines = [f"{name}: mean {stats.mean_tau:.4f} +- {stats.stderr_tau:.4f} (std {stats.std_tau:.4f}, "
             f"p95 {stats.p95_tau:.4f}) over {stats.samples} samples"]
    lines += [f"  {k:6s} single {v['single']:.3f}  avg {v['avg']:.3f}" for k, v in table.items()]
    lines += [f"  note: {n}" for n in basis_table_notes(table, name)]
    _emit(args, doc, "\n".join(lines))
    return 0


def cmd_bench_sweep(args) -> int:
    from .scheme import family_sweep
    name, nf = _coupling(args)
    if nf is None:
        raise ContractError("bench sweep needs a coupling Hamiltonian")
    grid = np.linspace(args.smin, args.smax, args.points)
    rows = family_sweep(args.family, grid, nf)
    text = sweep_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text)
    doc = report("bench_sweep", {"family": args.family, "coupling": name, "points": args.points},
                 {"csv": args.csv, "rows": [list(r) for r in rows]})
    _emit(args, doc, text.rstrip("\n"))
    return 0


def cmd_verify(args) -> int:
    results = {}
    ok = True
    if args.input and args.reference:
        a, b = _read_circuit(args.reference), _read_circuit(args.input)
        if a.n_qubits != b.n_qubits:
            raise ContractError("circuits differ in width")
        err = _equivalence(a, b, args.seed)
        results["equivalence"] = err
        ok &= err is not None and err < args.tol
    if args.templates:
        worst = TemplateLibrary.load(args.templates).verify()
        results["templates_worst_infidelity"] = worst
        ok &= worst < max(args.tol, 1e-9)
    if not results:
        raise ContractError("verify needs --input with --reference, or --templates")
    doc = report("verify", {"input": args.input, "reference": args.reference, "templates": args.templates,
                            "tol": args.tol}, {"results": results, "passed": ok})
    _emit(args, doc, " ".join(f"{k}={v:.3e}" for k, v in results.items()) + (" ok" if ok else " FAILED"))
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p.add_argument("--out", help="write the JSON report to this file")


def _coupling_args(p, default="xy"):
    p.add_argument("--coupling", default=default, help="xy | xx | file:<path> | random")
    p.add_argument("--g", type=float, default=1.0, help="coupling strength for presets")
    p.add_argument("--dist", default="normal", choices=RANDOM_DISTS, help="distribution for --coupling random")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reqisc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="run the Red or Full pipeline on a QASM file")
    _common(p)
    _coupling_args(p, default="cnot")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("red", "full"), default="full")
    p.add_argument("--w", type=int, default=3)
    p.add_argument("--mth", type=int, default=4)
    p.add_argument("--r", type=float, default=0.15)
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--amp-max", type=float, default=None)
    p.add_argument("--restarts", type=int, default=12)
    p.add_argument("--templates", help="template library JSON")
    p.add_argument("--emit", help="write the compiled circuit as QASM")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("route", help="map a circuit onto a device topology")
    _common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--topology", required=True, help="chain:N | grid:RxC | file:<path>")
    p.add_argument("--algo", choices=("sabre", "mirroring"), default="mirroring")
    p.add_argument("--W", type=float, default=0.5)
    p.add_argument("--ext", type=int, default=20)
    p.add_argument("--emit", help="write the routed circuit as QASM")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("pulse", help="time-optimal pulse for one two-qubit gate")
    _common(p)
    _coupling_args(p)
    p.add_argument("--gate", required=True, help="can:x,y,z | cnot | iswap | sqisw | b | swap")
    p.add_argument("--amp-max", type=float, default=None)
    p.set_defaults(func=cmd_pulse)

    bench = sub.add_parser("bench", help="duration benchmarks")
    bsub = bench.add_subparsers(dest="bench_command", required=True)
    p = bsub.add_parser("duration", help="Haar-average SU(4) duration and basis-gate table")
    _common(p)
    _coupling_args(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_bench_duration)
    p = bsub.add_parser("sweep", help="drive parameters along a gate family")
    _common(p)
    _coupling_args(p)
    p.add_argument("--family", choices=sorted(FAMILIES), default="cnot")
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--smin", type=float, default=0.0)
    p.add_argument("--smax", type=float, default=1.0)
    p.add_argument("--csv", help="write the sweep as CSV")
    p.set_defaults(func=cmd_bench_sweep)

    p = sub.add_parser("verify", help="check circuit equivalence or a template library")
    _common(p)
    p.add_argument("--input")
    p.add_argument("--reference")
    p.add_argument("--templates")
    p.add_argument("--tol", type=float, default=VERIFY_TOL)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ContractError, ValueError, OSError) as exc:
        print(f"reqisc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
