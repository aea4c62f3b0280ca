"""Small dense linear algebra and 2D root finding shared by the other modules."""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import qmc

STRUCT_TOL = 1e-10
HERMITIAN_TOL = 1e-12
ROOT_TOL = 1e-10
JACOBI_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, PX, PY, PZ)

XX = np.kron(PX, PX)
YY = np.kron(PY, PY)
ZZ = np.kron(PZ, PZ)

# Magic basis: local gates become real orthogonal, Can(x, y, z) becomes diagonal.
MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)
MAGIC_DAG = MAGIC.conj().T
# MAGIC @ D_PRIME == conj(MAGIC)
D_PRIME = np.diag([1.0, -1.0, 1.0, -1.0]).astype(complex)


class ContractError(ValueError):
    """An input violates a documented precondition."""


def is_unitary(u: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return bool(np.max(np.abs(h - h.conj().T)) < tol)


def expm_hermitian(h: np.ndarray, t: float = 1.0, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``exp(-i h t)`` via the eigendecomposition of Hermitian ``h``."""
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(h))))
    if not is_hermitian(h, tol * scale):
        raise ContractError("expm_hermitian requires a Hermitian generator")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _jacobi_angle(mats: list[np.ndarray], p: int, q: int) -> tuple[float, float]:
    # Cardoso-Souloumiac closed form for a joint real Givens rotation.
    g = np.array([[m[p, p] - m[q, q], m[p, q] + m[q, p]] for m in mats])
    gg = g.T @ g
    ton = gg[0, 0] - gg[1, 1]
    toff = gg[0, 1] + gg[1, 0]
    r = np.sqrt(ton * ton + toff * toff)
    if ton + r <= 1e-14 * max(r, 1e-300):
        # principal direction is pi/2: a 45 degree rotation (atan2 would see 0/0)
        theta = np.pi / 4 if r > 0 else 0.0
    else:
        theta = 0.5 * np.arctan2(toff, ton + r)
    return np.cos(theta), np.sin(theta)


def joint_diagonalize(mats: list[np.ndarray], tol: float = JACOBI_TOL,
                      max_sweeps: int = 100) -> np.ndarray:
    """Real orthogonal ``O`` with ``O.T @ A @ O`` diagonal for commuting symmetric ``A``."""
    mats = [np.array(m, dtype=float) for m in mats]
    n = mats[0].shape[0]
    o = np.eye(n)
    norm = max(1.0, sum(np.linalg.norm(m) for m in mats))
    for _ in range(max_sweeps):
        off = sum(np.linalg.norm(m - np.diag(np.diag(m))) for m in mats)
        if off < tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                c, s = _jacobi_angle(mats, p, q)
                if abs(s) < 1e-300:
                    continue
                r = np.eye(n)
                r[p, p] = c
                r[q, q] = c
                r[p, q] = -s
                r[q, p] = s
                for i, m in enumerate(mats):
                    mats[i] = r.T @ m @ r
                o = o @ r
    return o


def sym_unitary_eig(s: np.ndarray, tol: float = STRUCT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a symmetric unitary as ``s = O @ diag(d) @ O.T`` with ``O`` in SO(n).

    Returns ``(O, d)`` where ``d`` holds the unit-modulus eigenvalues.
    """
    s = np.asarray(s, dtype=complex)
    if np.max(np.abs(s - s.T)) > tol:
        raise ContractError("sym_unitary_eig requires a symmetric matrix")
    if not is_unitary(s, 1e3 * tol):
        raise ContractError("sym_unitary_eig requires a unitary matrix")
    o = joint_diagonalize([s.real, s.imag])
    if np.linalg.det(o) < 0:
        o[:, 0] = -o[:, 0]
    d = np.diag(o.T @ s @ o).copy()
    return o, d / np.abs(d)


def _project(p: np.ndarray, lo: np.ndarray, hi: np.ndarray, constraints) -> np.ndarray:
    p = np.clip(p, lo, hi)
    for _ in range(8):
        moved = False
        for normal, offset in constraints:
            normal = np.asarray(normal, dtype=float)
            gap = offset - normal @ p
            if gap > 0:
                p = np.clip(p + gap * normal / (normal @ normal), lo, hi)
                moved = True
        if not moved:
            break
    return p


def _damped_newton(fp, p0, lo, hi, project, tol, max_iter=60, h=1e-7):
    """Levenberg-Marquardt on a 2-vector with projection back into the domain."""
    p = project(np.asarray(p0, dtype=float))
    fv = fp(p)
    r = float(fv @ fv)
    mu = 1e-6
    for _ in range(max_iter):
        if r < (0.01 * tol) ** 2:
            break
        jac = np.empty((fv.size, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            up, dn = project(p + e), project(p - e)
            span = up[k] - dn[k]
            if span <= 0:
                jac[:, k] = 0.0
                continue
            jac[:, k] = (fp(up) - fp(dn)) / span
        jtj = jac.T @ jac
        g = jac.T @ fv
        improved = False
        for _ in range(12):
            try:
                step = np.linalg.solve(jtj + mu * np.diag(np.diag(jtj) + 1e-12), -g)
            except np.linalg.LinAlgError:
                mu *= 10
                continue
            q = project(p + step)
            fq = fp(q)
            rq = float(fq @ fq)
            if rq < r:
                p, fv, r = q, fq, rq
                mu = max(mu / 10, 1e-12)
                improved = True
                break
            mu *= 10
        if not improved:
            break
    return p


def solve_root_2d(f, lo, hi, constraints=(), tol: float = ROOT_TOL, prefer=None,
                  grid: int = 8, restarts: int = 64, seed: int = 0, max_candidates: int = 6):
    """Find ``p`` in a box (plus linear constraints ``normal @ p >= offset``) with ``|f(p)| < tol``.

    Damped Newton is started from the best points of a deterministic
    ``grid x grid`` scan. If nothing converges, up to ``restarts`` scrambled Sobol
    points are refined with trust-region least squares followed by Newton.
    Among converged roots the one minimizing ``prefer`` wins (first found if
    ``prefer`` is None).

    Returns ``(point, residual)``; ``point`` is None when nothing converged, in
    which case ``residual`` is the best residual seen.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    constraints = [(np.asarray(n, dtype=float), float(o)) for n, o in constraints]

    def fp(p):
        return np.asarray(f(_project(p, lo, hi, constraints)), dtype=float)

    def project(p):
        return _project(p, lo, hi, constraints)

    def newton(p0):
        p = _damped_newton(fp, p0, lo, hi, project, tol)
        return p, float(np.linalg.norm(f(p)))

    def refine(p0):
        p0 = _project(p0, lo, hi, constraints)
        try:
            sol = least_squares(fp, p0, bounds=(lo, hi), method="trf",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        except ValueError:
            return p0, np.inf
        return newton(sol.x)

    found = []
    best = (None, np.inf)

    def run(starts, step):
        nonlocal best
        for p0 in starts:
            p, res = step(p0)
            if res < best[1]:
                best = (p, res)
            if res < tol:
                found.append(p)
                if prefer is None:
                    return True
        return False

    axes = [np.linspace(lo[k], hi[k], grid) for k in range(2)]
    pts = np.array([_project(np.array([u, v]), lo, hi, constraints)
                    for u in axes[0] for v in axes[1]])
    scores = np.array([np.linalg.norm(f(p)) for p in pts])
    order = np.argsort(scores, kind="stable")
    done = run(pts[order[:max_candidates]], newton)
    if not done and not found:
        sobol = qmc.Sobol(2, scramble=True, seed=seed).random(restarts)
        run(lo + sobol * (hi - lo), refine)
    if not found:
        return None, best[1]
    if prefer is None:
        return found[0], float(np.linalg.norm(f(found[0])))
    vals = [prefer(p) for p in found]
    p = found[int(np.argmin(vals))]
    return p, float(np.linalg.norm(f(p)))
