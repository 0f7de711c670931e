"""Linearized operator, cubic remainders, bordered Newton and coercivity probe.

Unknowns are stacked as ``[phi (slow grid), psi (fast grid)]``, optionally
followed by the multiplier ``t`` on the kernel element.  All coupling
between the grids goes through the interpolation matrices of the domain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .ansatz import AnsatzBundle, ErrorFields
from .errors import NonConvergenceError, SpikelabError
from .grids import SymmetricField
from .operators import factorize

__all__ = [
    "RemainderPair",
    "CoercivityReport",
    "full_residual",
    "full_jacobian",
    "eval_L",
    "eval_N",
    "solve_projected",
    "coercivity_probe",
    "smallest_singular_value",
    "x_norm",
    "residual_norm",
    "projection_multiplier",
]


def full_residual(b: AnsatzBundle, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Discrete residual of the coupled system at ``(u, v)`` (flat arrays)."""
    p, dom = b.params, b.domain
    vs = dom.to_slow @ v
    uf = dom.to_fast @ u
    F1 = dom.neg_lap_slow @ u + b.V_slow.ravel() * u - p.mu1 * u**3 - p.beta * u * vs**2
    F2 = dom.neg_lap_fast @ v + b.W_fast.ravel() * v - p.mu2 * v**3 - p.beta * uf**2 * v
    return F1, F2


def full_jacobian(b: AnsatzBundle, u: np.ndarray, v: np.ndarray) -> sp.csr_matrix:
    """Jacobian of :func:`full_residual` as one sparse block matrix."""
    p, dom = b.params, b.domain
    Is, If = dom.to_slow, dom.to_fast
    vs = Is @ v
    uf = If @ u
    J11 = dom.neg_lap_slow + sp.diags(b.V_slow.ravel() - 3 * p.mu1 * u**2 - p.beta * vs**2)
    J12 = sp.diags(-2 * p.beta * u * vs) @ Is
    J21 = sp.diags(-2 * p.beta * v * uf) @ If
    J22 = dom.neg_lap_fast + sp.diags(b.W_fast.ravel() - 3 * p.mu2 * v**2 - p.beta * uf**2)
    return sp.bmat([[J11, J12], [J21, J22]], format="csr")


def eval_L(b: AnsatzBundle, phi: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linearization of the system at the ansatz, applied to ``(phi, psi)``."""
    p, dom = b.params, b.domain
    Xi, Th = b.Xi.values.ravel(), b.Theta.values.ravel()
    Th_s = dom.to_slow @ Th
    Xi_f = dom.to_fast @ Xi
    L1 = (dom.neg_lap_slow @ phi + b.V_slow.ravel() * phi
          - (3 * p.mu1 * Xi**2 + p.beta * Th_s**2) * phi - 2 * p.beta * Th_s * Xi * (dom.to_slow @ psi))
    L2 = (dom.neg_lap_fast @ psi + b.W_fast.ravel() * psi
          - (3 * p.mu2 * Th**2 + p.beta * Xi_f**2) * psi - 2 * p.beta * Th * Xi_f * (dom.to_fast @ phi))
    return L1, L2


def eval_N(b: AnsatzBundle, phi: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cubic remainders: what the system leaves after its linearization."""
    p, dom = b.params, b.domain
    Xi, Th = b.Xi.values.ravel(), b.Theta.values.ravel()
    Th_s = dom.to_slow @ Th
    Xi_f = dom.to_fast @ Xi
    psi_s = dom.to_slow @ psi
    phi_f = dom.to_fast @ phi
    N1 = (p.mu1 * phi**2 * (3 * Xi + phi) + p.beta * phi * psi_s * (2 * Th_s + psi_s)
          + p.beta * Xi * psi_s**2)
    N2 = (p.mu2 * psi**2 * (3 * Th + psi) + p.beta * psi * phi_f * (2 * Xi_f + phi_f)
          + p.beta * Th * phi_f**2)
    return N1, N2


def x_norm(b: AnsatzBundle, phi: np.ndarray, psi: np.ndarray) -> tuple[float, float]:
    """Discrete second-order Sobolev norms of ``phi`` and ``psi``.

    ``||Delta_h f||^2 + <f, -Delta_h f> + <q f, f>`` with ``q = V`` on the
    slow grid and ``q = W(eps y)`` on the fast grid.
    """
    dom = b.domain
    out = []
    for f, A, q, w in ((phi, dom.neg_lap_slow, b.V_slow, dom.slow.weights),
                       (psi, dom.neg_lap_fast, b.W_fast, dom.fast.weights)):
        w = w.ravel()
        Af = A @ f
        out.append(float(np.sqrt(np.sum(w * Af**2) + np.sum(w * f * Af) + np.sum(w * q.ravel() * f**2))))
    return out[0], out[1]


def residual_norm(b: AnsatzBundle, r1: np.ndarray, r2: np.ndarray) -> float:
    """Quadrature-weighted L2 norm of a residual pair."""
    w1 = b.domain.slow.weights.ravel()
    w2 = b.domain.fast.weights.ravel()
    return float(np.sqrt(np.sum(w1 * r1**2) + np.sum(w2 * r2**2)))


@dataclass(eq=False)
class RemainderPair:
    phi: SymmetricField
    psi: SymmetricField
    t: float
    norm_phi: float
    norm_psi: float
    sup_phi: float
    sup_psi: float
    residual: float
    iterations: int
    orthogonality: float

    @property
    def norm(self) -> float:
        return float(np.hypot(self.norm_phi, self.norm_psi))


def solve_projected(b: AnsatzBundle, errors: ErrorFields, *, tol: float = 1e-10,
                    max_iter: int = 25, linear: bool = False) -> RemainderPair:
    """Bordered Newton solve of the projected problem.

    Finds ``(phi, psi, t)`` with ``L(phi, psi) - E - N(phi, psi) = (0, t Z)``
    and ``<psi, Z> = 0``.  With ``linear`` the cubic remainder is dropped and
    a single bordered solve is performed.

    Raises
    ------
    NonConvergenceError
        If the weighted residual does not fall below ``tol``.
    """
    dom = b.domain
    ns, nf = dom.slow.size, dom.fast.size
    z = b.Z.z.values.ravel()
    wz = dom.fast.weights.ravel() * z
    zn = np.sqrt(b.Z.norm_sq)
    E1, E2 = errors.E1.values.ravel(), errors.E2.values.ravel()
    Xi, Th = b.Xi.values.ravel(), b.Theta.values.ravel()
    col = sp.csr_matrix(np.concatenate([np.zeros(ns), -z])[:, None])
    row = sp.csr_matrix(np.concatenate([np.zeros(ns), wz / zn])[None, :])

    def residual(x):
        phi, psi, t = x[:ns], x[ns:ns + nf], x[-1]
        L1, L2 = eval_L(b, phi, psi)
        if linear:
            N1, N2 = 0.0, 0.0
        else:
            N1, N2 = eval_N(b, phi, psi)
        return np.concatenate([L1 - E1 - N1, L2 - E2 - N2 - t * z, [wz @ psi / zn]])

    def jacobian(x):
        phi, psi = x[:ns], x[ns:ns + nf]
        if linear:
            J = full_jacobian(b, Xi, Th)
        else:
            J = full_jacobian(b, Xi + phi, Th + psi)
        return sp.bmat([[J, col], [row, None]], format="csc")

    def size(r):
        return np.hypot(residual_norm(b, r[:ns], r[ns:ns + nf]), r[-1])

    x = np.zeros(ns + nf + 1)
    r = residual(x)
    res = size(r)
    it = 0
    while res > tol and it < max_iter:
        it += 1
        dx = factorize(jacobian(x)).solve(-r)
        step = 1.0
        while True:
            trial = x + step * dx
            rt = residual(trial)
            rest = size(rt)
            if rest < res or step < 1e-3:
                break
            step *= 0.5
        if rest >= res and it > 1:
            break  # stagnated at the roundoff floor
        x, r, res = trial, rt, rest
        if linear:
            break
    if res > tol:
        raise NonConvergenceError(f"projected Newton stopped at residual {res:.3e} after {it} iterations")
    phi, psi, t = x[:ns], x[ns:ns + nf], float(x[-1])
    hp, hq = x_norm(b, phi, psi)
    orth = abs(wz @ psi) / (zn * max(np.sqrt(dom.fast.weights.ravel() @ psi**2), 1e-300))
    return RemainderPair(dom.slow.field(phi), dom.fast.field(psi), t, hp, hq,
                         float(np.abs(phi).max()), float(np.abs(psi).max()), res, it, float(orth))


def projection_multiplier(b: AnsatzBundle, errors: ErrorFields, pair: RemainderPair) -> float:
    """``<L2(phi, psi) - E2 - N2, Z> / ||Z||^2`` recomputed from a solved pair."""
    phi, psi = pair.phi.values.ravel(), pair.psi.values.ravel()
    _, L2 = eval_L(b, phi, psi)
    _, N2 = eval_N(b, phi, psi)
    r = b.domain.fast.field(L2 - errors.E2.values.ravel() - N2)
    return float(r.dot(b.Z.z) / b.Z.norm_sq)


@dataclass(frozen=True)
class CoercivityReport:
    sigma_min: float
    eps: float
    constrained: bool


def smallest_singular_value(M: sp.spmatrix, constraint: np.ndarray | None = None,
                            tol: float = 1e-6) -> float:
    """Smallest singular value of ``M``, optionally compressed by a unit vector.

    With ``constraint = z`` the operator is ``P M P`` restricted to the
    complement of ``z``, inverted through the bordered matrix
    ``[[M, z], [z^T, 0]]``.  Lanczos iteration on the inverse normal operator
    gives the largest eigenvalue ``1 / sigma^2``; each application costs two
    solves with a single sparse factorization.
    """
    M = sp.csc_matrix(M)
    n = M.shape[0]
    if constraint is not None:
        zt = np.asarray(constraint, dtype=float)
        zt = zt / np.linalg.norm(zt)
        zc = sp.csr_matrix(zt[:, None])
        lu = factorize(sp.bmat([[M, zc], [zc.T, None]], format="csc"))

        def apply(x):
            x = x - zt * (zt @ x)
            y = lu.solve(np.append(x, 0.0))[:n]
            return lu.solve(np.append(y, 0.0), trans="T")[:n]
    else:
        lu = factorize(M)

        def apply(x):
            return lu.solve(lu.solve(x), trans="T")

    op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    try:
        lam = spla.eigsh(op, k=1, which="LA", tol=tol, return_eigenvectors=False,
                         v0=np.ones(n) / np.sqrt(n))
    except spla.ArpackNoConvergence as exc:
        raise SpikelabError(f"coercivity iteration did not converge: {exc}") from exc
    return float(1.0 / np.sqrt(lam[0]))


def coercivity_probe(b: AnsatzBundle, constrained: bool = True, tol: float = 1e-6) -> CoercivityReport:
    """Smallest singular value of the linearization in quadrature-weighted L2.

    With ``constrained`` the operator is compressed to the orthogonal
    complement of the kernel element on both sides.
    """
    dom = b.domain
    ns = dom.slow.size
    J = full_jacobian(b, b.Xi.values.ravel(), b.Theta.values.ravel())
    sw = np.sqrt(np.concatenate([dom.slow.weights.ravel(), dom.fast.weights.ravel()]))
    M = sp.diags(sw) @ J @ sp.diags(1.0 / sw)
    z = np.concatenate([np.zeros(ns), b.Z.z.values.ravel()]) * sw if constrained else None
    return CoercivityReport(smallest_singular_value(M, z, tol), b.eps, constrained)
