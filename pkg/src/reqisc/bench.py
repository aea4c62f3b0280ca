"""Duration benchmarks over Haar-random SU(4), basis-gate tables, error proxy and reports."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .circuit import CNOT_TAU, Circuit, gate_duration, metrics
from .hamiltonian import NormalForm, normal_form, pauli_sum
from .numerics import ContractError
from .scheme import EA_MINUS, EA_PLUS, ND, TIE_TOL, optimal_time
from .weyl import HALF, QUARTER, random_unitaries, weyl_coordinates

SCHEMA_VERSION = 1
CHUNK = 10_000
BASIS_GATES = {
    "CNOT": (QUARTER, 0.0, 0.0),
    "iSWAP": (QUARTER, QUARTER, 0.0),
    "SQiSW": (QUARTER / 2, QUARTER / 2, 0.0),
    "B": (QUARTER, QUARTER / 2, 0.0),
}
# Haar-average number of basis gates per SU(4)
BASIS_AVG_COUNT = {"CNOT": 3.0, "iSWAP": 3.0, "SQiSW": 2.21, "B": 2.0}
TABLE_B_XY_AVG = 4.712
RANDOM_DISTS = ("normal", "uniform")


def thread_count() -> int:
    """Worker threads, capped by ``REQISC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("REQISC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class DurationStats:
    coupling: str
    samples: int
    mean_tau: float
    std_tau: float
    stderr_tau: float
    p95_tau: float
    subscheme_shares: dict
    seed: int
    dist: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _branch_arrays(coords: np.ndarray, abc):
    a, b, c = abc
    x, y, z = coords.T
    return x / a, (x + y - z) / (a + b - c), (x + y + z) / (a + b + c)


def durations_and_schemes(coords: np.ndarray, abc) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``tau`` and subscheme index (0 ND, 1 EA+, 2 EA-) per chamber point."""
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    refl = np.column_stack([HALF - coords[:, 0], coords[:, 1], -coords[:, 2]])
    t1 = np.vstack(_branch_arrays(coords, abc))
    t2 = np.vstack(_branch_arrays(refl, abc))
    tau1, tau2 = t1.max(axis=0), t2.max(axis=0)
    use2 = tau2 < tau1
    times = np.where(use2, t2, t1)
    tau = np.where(use2, tau2, tau1)
    tol = TIE_TOL * np.maximum(1.0, tau)
    scheme = np.where(times[0] >= tau - tol, 0, np.where(times[1] >= tau - tol, 1, 2))
    return tau, scheme


def _chunk_stats(seed_seq, n: int, abc):
    u = random_unitaries(np.random.default_rng(seed_seq), n)
    tau, scheme = durations_and_schemes(weyl_coordinates(u), abc)
    return tau, np.bincount(scheme, minlength=3)


def haar_duration_stats(coupling: NormalForm | np.ndarray, n_samples: int = 100_000, seed: int = 0,
                        name: str = "custom", threads: int | None = None, dist: str | None = None
                        ) -> DurationStats:
    """Mean / spread of the time-optimal duration over Haar SU(4) samples (units of 1/g).

    Samples are drawn in fixed chunks with per-chunk derived seeds, so the result
    is bit-for-bit identical for any thread count.
    """
    nf = coupling if isinstance(coupling, NormalForm) else normal_form(coupling)
    if n_samples < 1:
        raise ContractError("n_samples must be positive")
    g = nf.strength
    abc = tuple(v / g for v in nf.coefficients)
    sizes = [CHUNK] * (n_samples // CHUNK) + ([n_samples % CHUNK] if n_samples % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    workers = min(threads or thread_count(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _chunk_stats(*a, abc), zip(seeds, sizes)))
    else:
        parts = [_chunk_stats(s, n, abc) for s, n in zip(seeds, sizes)]
    tau = np.concatenate([p[0] for p in parts])
    counts = sum(p[1] for p in parts)
    shares = {k: float(v) / n_samples for k, v in zip((ND, EA_PLUS, EA_MINUS), counts)}
    std = float(tau.std(ddof=1)) if n_samples > 1 else 0.0
    return DurationStats(name, n_samples, float(math.fsum(tau) / n_samples), std,
                         std / math.sqrt(n_samples), float(np.percentile(tau, 95)), shares, seed, dist)


def basis_gate_table(coupling: NormalForm | np.ndarray) -> dict:
    """Single-gate durations of CNOT, iSWAP, SQiSW, B and their Haar-average SU(4) cost."""
    nf = coupling if isinstance(coupling, NormalForm) else normal_form(coupling)
    g = nf.strength
    abc = tuple(v / g for v in nf.coefficients)
    rows = {}
    for name, c in BASIS_GATES.items():
        single = optimal_time(c, abc)[0]
        rows[name] = {"single": single, "avg": single * BASIS_AVG_COUNT[name],
                      "count": BASIS_AVG_COUNT[name]}
    return rows


def basis_table_notes(rows: dict, coupling_name: str) -> list[str]:
    notes = []
    if coupling_name == "xy":
        ours = rows["B"]["avg"]
        notes.append(f"B avg is {ours:.3f} (2 x single); the reference value "
                     f"{TABLE_B_XY_AVG:.3f} equals 3 x single")
    return notes


def random_normal_form(rng, dist: str = "normal") -> NormalForm:
    """Random coupling with Pauli coefficients from the named distribution."""
    rng = np.random.default_rng(rng)
    if dist == "normal":
        table = rng.standard_normal((4, 4))
    elif dist == "uniform":
        table = rng.uniform(-1, 1, (4, 4))
    else:
        raise ContractError(f"unknown coupling distribution {dist!r}; choose from {RANDOM_DISTS}")
    table[0, 0] = 0.0
    return normal_form(pauli_sum(table))


@dataclass
class ErrorProxyConfig:
    p0: float = 1e-3
    tau0: float = CNOT_TAU

    def __post_init__(self):
        if not 0 < self.p0 < 1 or self.tau0 <= 0:
            raise ContractError("p0 must lie in (0, 1) and tau0 must be positive")


def error_proxy(circuit: Circuit, nf=None, cfg: ErrorProxyConfig | None = None) -> dict:
    """Depolarizing proxy: each 2Q gate fails with ``p0 * tau / tau0``; fidelity is the product."""
    cfg = cfg or ErrorProxyConfig()
    log_f = 0.0
    cache: dict = {}
    for g in circuit.gates:
        if g.arity != 2:
            continue
        key = (g.kind, g.params) if g.kind != "unitary" else id(g)
        if key not in cache:
            cache[key] = gate_duration(g, nf)
        p = cfg.p0 * cache[key] / cfg.tau0
        log_f += math.log1p(-min(p, 1.0)) if p < 1 else -math.inf
    fid = math.exp(log_f)
    return {"est_fidelity": fid, "est_error": 1 - fid, "duration": metrics(circuit, nf).duration}


def report(kind: str, inputs: dict | None = None, outputs: dict | None = None,
           metrics_doc: dict | None = None, routing: dict | None = None, **extra) -> dict:
    """Versioned JSON-ready report document."""
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "inputs": inputs or {},
           "outputs": outputs or {}}
    if metrics_doc is not None:
        doc["metrics"] = metrics_doc
    if routing is not None:
        doc["routing"] = routing
    doc.update(extra)
    return doc


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "A1", "A2", "delta", "tau"])
    for r in rows:
        w.writerow([repr(float(v) + 0.0) for v in r])
    return buf.getvalue()


__all__ = [
    "DurationStats", "haar_duration_stats", "basis_gate_table", "basis_table_notes",
    "ErrorProxyConfig", "error_proxy", "report", "sweep_csv", "durations_and_schemes",
    "random_normal_form", "thread_count", "SCHEMA_VERSION",
]
