"""Finite-difference Laplacians, quadrature, grid transfer and sparse solves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularFactorizationError
from .grids import RadialGrid, SymmetricField, SymmetricGrid

__all__ = [
    "build_laplacian_radial",
    "build_laplacian_symmetric",
    "radial_derivative",
    "integrate",
    "interpolation_matrix_1d",
    "transfer_matrix",
    "LinearSystem",
    "Factorization",
    "factorize",
    "solve_linear",
]

_C2 = {2: np.array([1.0, -2.0, 1.0]), 4: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0}
_C1 = {2: np.array([-0.5, 0.0, 0.5]), 4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0}


def _fold(j: int, n: int) -> tuple[int, float]:
    """Map a stencil index onto an unknown, with even/odd ghost reflections."""
    if j < 0:
        return -j, 1.0
    if j >= n + 1:  # beyond the Dirichlet node: odd reflection about R_max
        return 2 * n - j, -1.0
    return j, 1.0


def build_laplacian_radial(grid: RadialGrid, order: int = 2) -> sp.csr_matrix:
    """Discrete ``u'' + (N-1)/r u'`` on the unknowns of a radial grid.

    Parameters
    ----------
    grid : RadialGrid
    order : {2, 4}
        Central stencil width.  The origin row uses ``Delta u(0) = N u''(0)``
        with even ghost nodes; the Dirichlet node at ``R_max`` is eliminated.
    """
    if order not in _C2:
        raise ValueError("order must be 2 or 4")
    n, h, N = grid.n, grid.h, grid.N
    c2, c1 = _C2[order] / h**2, _C1[order] / h
    half = c2.size // 2
    rows, cols, vals = [], [], []
    r = grid.r
    for k, off in enumerate(range(-half, half + 1)):
        i = np.arange(n)
        coef = np.where(i == 0, N * c2[k], c2[k] + (N - 1) * c1[k] / np.where(i == 0, 1.0, r))
        for ii, cc in zip(i, coef):
            j, s = _fold(ii + off, n)
            if j == n:
                continue
            rows.append(ii)
            cols.append(j)
            vals.append(s * cc)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def radial_derivative(grid: RadialGrid, u: np.ndarray, order: int = 4) -> np.ndarray:
    """Centered derivative of an even radial profile; zero at the origin."""
    n = grid.n
    c1 = _C1[order] / grid.h
    half = c1.size // 2
    ext = np.concatenate([u[half:0:-1], u, [0.0], -u[n - 1:n - half:-1]])
    du = np.zeros(n)
    for k, off in enumerate(range(-half, half + 1)):
        du += c1[k] * ext[half + off: half + off + n]
    du[0] = 0.0
    return du


def _axis_second_derivative(x: np.ndarray, radial_weight: bool) -> sp.csr_matrix:
    """Three-point second derivative on a nonuniform half-axis.

    ``radial_weight`` adds ``(1/r) d/dr`` for the transverse axis of a
    cylinder; at ``r=0`` the pair becomes ``2 d^2/dr^2``.
    """
    n = x.size - 1
    hm = np.diff(x)[:-1]
    hp = np.diff(x)[1:]
    lo = 2.0 / (hm * (hm + hp))
    up = 2.0 / (hp * (hm + hp))
    di = -lo - up
    if radial_weight:
        r = x[1:-1]
        den = hp * hm * (hp + hm)
        lo = lo - hp**2 / den / r
        up = up + hm**2 / den / r
        di = di + (hp**2 - hm**2) / den / r
    d0 = 2.0 / x[1] ** 2 * (2.0 if radial_weight else 1.0)
    main = np.concatenate([[-d0], di])
    upper = np.concatenate([[d0], up[:-1]])
    lower = lo
    return sp.diags([lower, main, upper], [-1, 0, 1], shape=(n, n), format="csr")


def build_laplacian_symmetric(grid: SymmetricGrid) -> sp.csr_matrix:
    """Discrete Laplacian on the symmetry-reduced grid (C-order unknowns)."""
    D1 = _axis_second_derivative(grid.x1, False)
    D2 = _axis_second_derivative(grid.x2, grid.N == 3)
    n1, n2 = grid.shape
    return (sp.kron(D1, sp.identity(n2)) + sp.kron(sp.identity(n1), D2)).tocsr()


def integrate(values, grid: RadialGrid | SymmetricGrid) -> float:
    """Trapezoidal integral over R^N of an even field sampled on ``grid``."""
    if isinstance(values, SymmetricField):
        values = values.values
    return float(np.sum(grid.weights * np.asarray(values)))


def interpolation_matrix_1d(x: np.ndarray, t: np.ndarray) -> sp.csr_matrix:
    """Four-point Lagrange interpolation from an even half-axis to points ``t``.

    ``x`` includes the Dirichlet node (value zero); targets beyond it get zero
    rows.  The result maps the ``x.size - 1`` active values to ``t``.
    """
    n = x.size - 1
    t = np.abs(np.asarray(t, dtype=float))
    xe = np.concatenate([-x[2:0:-1], x])  # two mirrored nodes in front
    rows, cols, vals = [], [], []
    js = np.searchsorted(x, t, side="right") - 1
    for i, (ti, j) in enumerate(zip(t, js)):
        if j >= n:
            continue
        j0 = min(j - 1, n - 3)
        idx = np.arange(j0, j0 + 4)
        nodes = xe[idx + 2]
        for a in range(4):
            others = np.delete(nodes, a)
            w = np.prod((ti - others) / (nodes[a] - others))
            k = abs(idx[a])
            if k >= n or w == 0.0:
                continue
            rows.append(i)
            cols.append(k)
            vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(t.size, n))


def transfer_matrix(src: SymmetricGrid, t1: np.ndarray, t2: np.ndarray) -> sp.csr_matrix:
    """Tensor interpolation from ``src`` to the tensor points ``t1 x t2``."""
    return sp.kron(interpolation_matrix_1d(src.x1, t1),
                   interpolation_matrix_1d(src.x2, t2)).tocsr()


@dataclass
class LinearSystem:
    """Sparse operator together with a right-hand side."""

    operator: sp.spmatrix
    rhs: np.ndarray

    def __post_init__(self):
        m, n = self.operator.shape
        if m != n or n != np.shape(self.rhs)[0]:
            raise ValueError(f"operator {self.operator.shape} incompatible with rhs {np.shape(self.rhs)}")


class Factorization:
    """Reusable sparse LU factors with a pivot-size guard."""

    def __init__(self, A: sp.spmatrix, pivot_tol: float = 1e-14):
        A = sp.csc_matrix(A)
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularFactorizationError(f"factorization failed: {exc}") from exc
        d = np.abs(self._lu.U.diagonal())
        k = int(np.argmin(d))
        if d[k] <= pivot_tol * d.max():
            raise SingularFactorizationError(
                f"pivot {k} has relative size {d[k] / d.max():.3e} below {pivot_tol:g}")
        self.shape = A.shape

    def solve(self, b: np.ndarray, trans: str = "N") -> np.ndarray:
        return self._lu.solve(np.asarray(b, dtype=float), trans=trans)


def factorize(A: sp.spmatrix, pivot_tol: float = 1e-14) -> Factorization:
    return Factorization(A, pivot_tol)


def solve_linear(system: LinearSystem) -> np.ndarray:
    """Direct sparse solve; the relative residual is checked, not assumed."""
    b = np.asarray(system.rhs, dtype=float)
    if not np.any(b):
        return np.zeros_like(b)
    x = factorize(system.operator).solve(b)
    res = np.linalg.norm(system.operator @ x - b) / np.linalg.norm(b)
    if res > 1e-10:
        raise SingularFactorizationError(f"relative residual {res:.3e} after direct solve")
    return x
