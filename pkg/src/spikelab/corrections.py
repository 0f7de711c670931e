"""Linear correction terms of the ansatz and the approximate kernel element."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .groundstate import GroundState, RadialProfile, fit_decay
from .grids import SymmetricField, SymmetricGrid
from .operators import LinearSystem, build_laplacian_radial, factorize, solve_linear
from .potentials import PotentialSpec

__all__ = [
    "CorrectionBundle",
    "KernelElement",
    "PhiSolver",
    "solve_phi",
    "solve_psi_profile",
    "assemble_psi_eps",
    "assemble_Z",
    "two_bumps",
]


@dataclass(eq=False)
class CorrectionBundle:
    phi: SymmetricField
    psi_profile: RadialProfile
    psi_eps: SymmetricField

    @property
    def sup_phi(self) -> float:
        return self.phi.sup()

    @property
    def phi_at_origin(self) -> float:
        return self.phi.origin


@dataclass(eq=False)
class KernelElement:
    """Difference of the x1-derivatives of the two translated bumps.

    Each derivative is odd about its own bump center, and the antisymmetric
    combination is therefore even under ``y1 -> -y1``.
    """

    z: SymmetricField
    norm_sq: float


class PhiSolver:
    """Factored operator ``-Delta + V - 3 mu1 Upsilon^2`` on the slow grid.

    The factorization depends only on the slow grid, so one instance serves
    every peak position at a given ``eps``.
    """

    def __init__(self, upsilon: SymmetricField, V: PotentialSpec, mu1: float, neg_lap=None):
        from .operators import build_laplacian_symmetric

        grid = upsilon.grid
        A = -build_laplacian_symmetric(grid) if neg_lap is None else neg_lap
        q = V.on_grid(grid).ravel() - 3.0 * mu1 * upsilon.values.ravel() ** 2
        self.operator = (A + sp.diags(q)).tocsc()
        self.upsilon = upsilon
        self._lu = factorize(self.operator)

    def solve(self, rhs: np.ndarray) -> SymmetricField:
        b = np.asarray(rhs, dtype=float).ravel()
        grid = self.upsilon.grid
        if not np.any(b):
            return grid.zeros()
        x = self._lu.solve(b)
        res = np.linalg.norm(self.operator @ x - b) / np.linalg.norm(b)
        if res > 1e-10:
            x = x + self._lu.solve(b - self.operator @ x)
        return grid.field(x)


def solve_phi(upsilon: SymmetricField, V: PotentialSpec, mu1: float,
              U_eps_slow: SymmetricField, solver: PhiSolver | None = None) -> SymmetricField:
    """Solve ``(-Delta + V - 3 mu1 Upsilon^2) Phi = Upsilon * U_eps(x/eps)**2``.

    Parameters
    ----------
    upsilon : SymmetricField
        Slow ground state on the slow grid.
    V : PotentialSpec
    mu1 : float
    U_eps_slow : SymmetricField
        The two-bump fast profile sampled at ``x/eps`` on the slow grid.
    solver : PhiSolver, optional
        Reuses an existing factorization.
    """
    if U_eps_slow.grid is not upsilon.grid:
        raise ConfigError("source and ground state live on different grids")
    solver = PhiSolver(upsilon, V, mu1) if solver is None else solver
    return solver.solve(upsilon.values * U_eps_slow.values**2)


def solve_psi_profile(U: GroundState, omega0: float, mu2: float, rhs=None) -> RadialProfile:
    """Radial solution of ``-Delta Psi + (omega0 - 3 mu2 U^2) Psi = U``.

    The tail rate of ``|Psi|`` is fitted and stored in ``meta['tail_rate']``.
    """
    if omega0 <= 0:
        raise ConfigError("omega0 must be positive")
    grid = U.grid
    A = -build_laplacian_radial(grid, order=4)
    M = (A + sp.diags(omega0 - 3.0 * mu2 * U.profile.values**2)).tocsc()
    b = U.profile.values if rhs is None else np.asarray(rhs, dtype=float)
    psi = solve_linear(LinearSystem(M, b))
    prof = RadialProfile(grid, psi, {"kind": "psi", "omega0": omega0, "mu2": mu2})
    if np.any(psi):
        fit = fit_decay(prof, power=0.0)
        prof.meta["tail_rate"] = fit.rate
    prof.meta["residual"] = float(np.abs(M @ psi - b).max())
    return prof


def two_bumps(profile, grid: SymmetricGrid, shift: float, deriv: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """A radial profile centered at ``(-shift, 0)`` and at ``(+shift, 0)``.

    With ``deriv`` the x1-derivatives of the two translates are returned.
    """
    if shift < 0 or shift >= grid.extent[0]:
        raise ConfigError(f"shift {shift:.4g} outside the grid extent {grid.extent[0]:.4g}")
    X1, X2 = grid.mesh
    out = []
    for c in (-shift, shift):
        d1 = X1 - c
        r = np.hypot(d1, X2)
        if deriv:
            safe = np.where(r > 0, r, 1.0)
            out.append(np.where(r > 0, profile.slope(r) * d1 / safe, 0.0))
        else:
            out.append(profile(r))
    return out[0], out[1]


def assemble_psi_eps(psi: RadialProfile, phi0: float, Y0: float, beta: float,
                     shift: float, grid: SymmetricGrid, parts: bool = False):
    """``2 beta Phi(0) Upsilon(0) [Psi(y + P/eps) + Psi(y - P/eps)]``.

    With ``parts`` the two scaled translates are returned as well.
    """
    a, b = two_bumps(psi, grid, shift)
    c = 2.0 * beta * phi0 * Y0
    f = grid.field(c * (a + b))
    return (f, c * a, c * b) if parts else f


def assemble_Z(U: GroundState | RadialProfile, shift: float, grid: SymmetricGrid) -> KernelElement:
    """``d1 U(y + P/eps) - d1 U(y - P/eps)`` from the differentiated profile."""
    prof = U.profile if isinstance(U, GroundState) else U
    at_minus, at_plus = two_bumps(prof, grid, shift, deriv=True)
    z = grid.field(at_minus - at_plus)
    return KernelElement(z, z.dot(z))
