"""Positive radial ground states of ``-Delta u + V u = mu u^3``.

The radial solve uses a fourth-order central stencil so that profiles are
accurate enough to serve as interpolation sources for the two-scale grids.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .errors import AssumptionError, ConfigError, GroundStateError, SpikelabError
from .grids import RadialGrid, SymmetricField, SymmetricGrid
from .operators import build_laplacian_radial, build_laplacian_symmetric, factorize, radial_derivative
from .potentials import PotentialSpec

__all__ = [
    "RadialProfile",
    "DecayFit",
    "GroundState",
    "NondegeneracyReport",
    "solve_ground_state",
    "rescale_ground_state",
    "fit_decay",
    "check_nondegeneracy",
    "solve_ground_state_on_grid",
    "save_profile",
    "load_profile",
    "default_radial_grid",
]

MAGIC = "# spikelab radial-profile v1"

# peak of the unit ground state, used only to shape the initial guess
_PEAK_HINT = {1: np.sqrt(2.0), 2: 2.2, 3: 4.3}


@dataclass(eq=False)
class RadialProfile:
    """Samples of a radial function on the unknowns of a radial grid."""

    grid: RadialGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.grid.N

    @cached_property
    def _spline(self) -> CubicSpline:
        r = self.grid.r_all
        v = np.append(self.values, 0.0)
        return CubicSpline(r, v, bc_type=((1, 0.0), "not-a-knot"))

    @cached_property
    def derivative(self) -> np.ndarray:
        """Fourth-order centered ``d/dr`` at the grid nodes."""
        return radial_derivative(self.grid, self.values, order=4)

    @cached_property
    def _dspline(self) -> CubicSpline:
        return CubicSpline(self.grid.r_all, np.append(self.derivative, self._edge_slope()),
                           bc_type="not-a-knot")

    def _edge_slope(self) -> float:
        return -self.values[-1] / self.grid.h

    def __call__(self, r) -> np.ndarray:
        """Cubic-spline evaluation, zero beyond ``R_max``."""
        r = np.abs(np.asarray(r, dtype=float))
        out = self._spline(np.minimum(r, self.grid.R_max))
        return np.where(r < self.grid.R_max, out, 0.0)

    def slope(self, r) -> np.ndarray:
        """Interpolated radial derivative, zero beyond ``R_max``."""
        r = np.abs(np.asarray(r, dtype=float))
        out = self._dspline(np.minimum(r, self.grid.R_max))
        return np.where(r < self.grid.R_max, out, 0.0)

    def integrate(self, f=None) -> float:
        v = self.values if f is None else f
        return float(np.sum(self.grid.weights * v))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares tail fit ``ln U = c - rate r - power ln r``."""

    rate: float
    power: float
    rms: float
    window: tuple[float, float]
    nodes: int


@dataclass(eq=False)
class GroundState:
    profile: RadialProfile
    potential: PotentialSpec
    mu: float
    N: int
    peak_value: float
    residual: float
    iterations: int
    decay_fit: DecayFit | None = None

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    def __call__(self, r) -> np.ndarray:
        return self.profile(r)


@dataclass(frozen=True)
class NondegeneracyReport:
    smallest_eigenvalue_magnitude: float
    eigenvalue: float
    sector: int
    threshold: float
    degenerate: bool
    sectors_checked: tuple[int, ...]
    subspace: str = "even"


def default_radial_grid(lam: float, N: int, h: float = 0.01, R: float | None = None) -> RadialGrid:
    """Grid resolving the decay length ``1/sqrt(lam)`` with ``exp(-sqrt(lam) R) < 1e-10``."""
    s = np.sqrt(lam)
    R = 23.0 / s if R is None else R
    return RadialGrid(R, h / s, N)


def roundoff_floor(A, u) -> float:
    """Attainable residual size when applying ``A`` to ``u`` in double precision."""
    return float(4.0 * np.finfo(float).eps * np.max(abs(A) @ np.abs(u)))


def _newton(F, J, u, tol, max_iter, what, A=None):
    # max-norm for the stopping test, 2-norm as line-search merit
    f = F(u)
    floor = 0.0
    if A is not None:
        floor = roundoff_floor(A, u)
        tol = max(tol, floor)
    for it in range(1, max_iter + 1):
        if np.abs(f).max() <= tol:
            return u, float(np.abs(f).max()), it - 1
        du = factorize(J(u)).solve(-f)
        merit = np.linalg.norm(f)
        step = 1.0
        while True:
            trial = u + step * du
            ft = F(trial)
            if np.linalg.norm(ft) < merit or step < 1e-3:
                break
            step *= 0.5
        if np.linalg.norm(ft) >= merit and np.abs(f).max() <= 16 * floor:
            # stagnated within a small multiple of the roundoff floor
            return u, float(np.abs(f).max()), it
        u, f = trial, ft
    fn = float(np.abs(f).max())
    if fn <= tol:
        return u, fn, max_iter
    raise GroundStateError(f"{what}: Newton stopped at residual {fn:.3e} after {max_iter} iterations")


def solve_ground_state(potential: PotentialSpec, mu: float, N: int | None = None,
                       grid: RadialGrid | None = None, *, tol: float = 1e-10,
                       max_iter: int = 80, order: int = 4) -> GroundState:
    """Positive radial solution of ``-Delta u + V u = mu u^3``.

    Parameters
    ----------
    potential : PotentialSpec
        Radial potential with positive infimum.
    mu : float
        Cubic coefficient, positive.
    N : int, optional
        Dimension; taken from ``grid`` when omitted.
    grid : RadialGrid, optional
        Defaults to :func:`default_radial_grid` at stiffness ``V(0)``.
    tol : float
        Max-norm residual target.
    order : {2, 4}
        Stencil order of the radial Laplacian.

    Returns
    -------
    GroundState

    Raises
    ------
    GroundStateError
        Newton failure or convergence to a zero or sign-changing state.
    """
    if mu <= 0:
        raise ConfigError(f"mu must be positive, got {mu}")
    if grid is None:
        if N is None:
            raise ConfigError("either N or grid is required")
        lam0 = potential.require_positive(np.atleast_1d(potential.radial(0.0, N)))
        grid = default_radial_grid(lam0, N)
    N = grid.N
    if not potential.is_radial(N):
        raise ConfigError("ground states need a radial potential")
    r = grid.r
    V = potential.radial(r, N)
    potential.require_positive(np.append(V, potential.radial(grid.R_max, N)))
    lam = float(V[0])
    A = -build_laplacian_radial(grid, order)

    width = 1.0 + 0.3 * (N - 1)
    u = _PEAK_HINT[N] * np.sqrt(lam / mu) / np.cosh(width * np.sqrt(lam) * r)
    # residual entries scale like V u, so the target is relative to that size
    tol_eff = tol * max(1.0, lam * np.sqrt(lam / mu))
    its = 0

    def solve_with(Vs, u0):
        nonlocal its
        F = lambda u: A @ u + Vs * u - mu * u**3
        J = lambda u: (A + sp.diags(Vs - 3.0 * mu * u**2)).tocsc()
        out, res, k = _newton(F, J, u0, tol_eff, max_iter, "ground state", A)
        its += k
        return out, res

    u, res = solve_with(np.full_like(V, lam), u)
    # natural-parameter homotopy from the constant potential V(0) toward V
    s, ds = 0.0, 0.25
    while s < 1.0 and np.ptp(V) > 0:
        s_try = min(1.0, s + ds)
        try:
            trial, res_try = solve_with(lam + s_try * (V - lam), u)
            if trial.min() <= 0:
                raise GroundStateError("lost positivity")
        except GroundStateError:
            ds *= 0.5
            if ds < 1e-3:
                raise GroundStateError(f"continuation in the potential stalled at s={s:.3f}")
            continue
        u, res, s = trial, res_try, s_try
    if u.max() < 1e-6:
        raise GroundStateError("Newton converged to the zero solution")
    if u.min() <= 0:
        raise GroundStateError("Newton converged to a sign-changing solution")
    prof = RadialProfile(grid, u, {"kind": "ground_state", "mu": mu, "lambda": lam})
    gs = GroundState(prof, potential, mu, N, float(u[0]), float(res), its)
    try:
        gs.decay_fit = fit_decay(prof)
    except SpikelabError:
        gs.decay_fit = None
    return gs


def rescale_ground_state(base: GroundState, lam: float, mu: float,
                         grid: RadialGrid | None = None) -> GroundState:
    """``sqrt(lam/mu) U(sqrt(lam) r)`` from the unit ground state ``U``."""
    if lam <= 0 or mu <= 0:
        raise ConfigError("scaling needs lam > 0 and mu > 0")
    if not (base.potential.kind == "constant" and base.potential.value == 1.0 and base.mu == 1.0):
        raise ConfigError("rescaling needs a base state solved at lam = mu = 1")
    s = np.sqrt(lam)
    if grid is None:
        grid = RadialGrid(base.grid.R_max / s, base.grid.h / s, base.N)
    u = np.sqrt(lam / mu) * base.profile(s * grid.r)
    prof = RadialProfile(grid, u, {"kind": "ground_state", "mu": mu, "lambda": lam})
    gs = GroundState(prof, PotentialSpec.constant(lam), mu, base.N, float(u[0]),
                     float("nan"), 0)
    try:
        gs.decay_fit = fit_decay(prof)
    except SpikelabError:
        gs.decay_fit = None
    return gs


def fit_decay(profile: RadialProfile, window: tuple[float, float] | None = None,
              power: float | None = None) -> DecayFit:
    """Fit the exponential tail with the algebraic factor divided out.

    The default window keeps nodes where the profile lies in ``[1e-8, 1e-2]``.
    ``power`` defaults to ``(N-1)/2``.
    """
    r, u = profile.grid.r, profile.values
    p = 0.5 * (profile.N - 1) if power is None else power
    if window is None:
        mask = (np.abs(u) >= 1e-8) & (np.abs(u) <= 1e-2)
        if mask.any():
            idx = np.flatnonzero(mask)
            window = (float(r[idx[0]]), float(r[idx[-1]]))
        else:
            window = (0.0, 0.0)
    mask = (r >= window[0]) & (r <= window[1]) & (r > 0) & (np.abs(u) > 0)
    if mask.sum() < 10:
        raise SpikelabError(f"decay window {window} holds fewer than 10 nodes")
    rr = r[mask]
    y = np.log(np.abs(u[mask])) + p * np.log(rr)
    M = np.column_stack([np.ones_like(rr), -rr])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    rms = float(np.sqrt(np.mean((M @ coef - y) ** 2)))
    return DecayFit(float(coef[1]), p, rms, window, int(mask.sum()))


def _sector_operator(gs: GroundState, ell: int, shift: float, order: int) -> sp.csc_matrix:
    grid = gs.grid
    A = -build_laplacian_radial(grid, order)
    q = gs.potential.radial(grid.r, gs.N) - 3.0 * gs.mu * gs.profile.values**2 - shift
    if ell == 0:
        return (A + sp.diags(q)).tocsc()
    r = grid.r[1:]
    cent = ell * (ell + gs.N - 2) / r**2
    return (A[1:, 1:] + sp.diags(q[1:] + cent)).tocsc()


def check_nondegeneracy(gs: GroundState, shift: float = 0.0, rel_threshold: float = 1e-6,
                        order: int = 4) -> NondegeneracyReport:
    """Smallest |eigenvalue| of ``-Delta + V - 3 mu U^2 - shift`` on even functions.

    Even functions decompose into radial sectors of even angular degree
    ``ell``.  Sectors are scanned upward until the centrifugal barrier
    dominates ``3 mu U^2`` pointwise, beyond which the sector operator is
    bounded below by ``inf V``.
    """
    r, u = gs.grid.r, gs.profile.values
    inf_v = float(np.min(gs.potential.radial(np.append(r, gs.grid.R_max), gs.N)))
    need = float(np.max(r**2 * 3.0 * gs.mu * u**2))
    sectors = [0]
    if gs.N > 1:
        ell = 2
        while True:
            sectors.append(ell)
            if ell * (ell + gs.N - 2) >= need:
                break
            ell += 2
    best = (np.inf, 0.0, 0)
    for ell in sectors:
        M = _sector_operator(gs, ell, shift, order)
        try:
            # fixed start vector: ARPACK otherwise draws a random one
            vals = spla.eigs(M, k=3, sigma=0.0, which="LM", return_eigenvectors=False,
                             v0=np.ones(M.shape[0]))
        except Exception as exc:  # ARPACK failures surface as several types
            raise SpikelabError(f"eigen-solve failed in sector {ell}: {exc}") from exc
        vals = np.real(vals)
        k = int(np.argmin(np.abs(vals)))
        if abs(vals[k]) < best[0]:
            best = (abs(vals[k]), float(vals[k]), ell)
    thr = rel_threshold * inf_v
    return NondegeneracyReport(float(best[0]), best[1], best[2], thr, bool(best[0] < thr), tuple(sectors))


def solve_ground_state_on_grid(gs: GroundState, grid: SymmetricGrid, *, tol: float = 1e-10,
                               max_iter: int = 30) -> SymmetricField:
    """Re-solve the ground-state equation on a symmetric grid.

    Starts from the interpolated radial profile, so the returned field is an
    exact discrete solution on ``grid`` rather than an interpolant.
    """
    if grid.N != gs.N:
        raise ConfigError(f"grid dimension {grid.N} differs from ground state dimension {gs.N}")
    A = -build_laplacian_symmetric(grid)
    V = gs.potential.on_grid(grid).ravel()
    mu = gs.mu

    def F(u):
        return A @ u + V * u - mu * u**3

    def J(u):
        return (A + sp.diags(V - 3.0 * mu * u**2)).tocsc()

    u0 = gs.profile(grid.radius).ravel()
    scale = max(1.0, abs(V[0]) * abs(u0[0]))
    u, _, _ = _newton(F, J, u0, tol * scale, max_iter, "ground state on grid", A)
    if u.min() <= 0:
        raise GroundStateError("grid ground state lost positivity")
    return grid.field(u)


def save_profile(path: str | Path, profile: RadialProfile, **meta) -> None:
    """Write a profile in the versioned text format."""
    head = dict(profile.meta)
    head.update(meta)
    head.update({"N": profile.N, "R_max": profile.grid.R_max, "h": profile.grid.h})
    lines = [MAGIC, "# " + json.dumps(head, sort_keys=True, default=str), "# r value"]
    body = "\n".join(f"{r:.17g} {v:.17g}" for r, v in zip(profile.grid.r, profile.values))
    Path(path).write_text("\n".join(lines) + "\n" + body + "\n")


def load_profile(path: str | Path) -> RadialProfile:
    text = Path(path).read_text().splitlines()
    if not text or text[0] != MAGIC:
        raise ConfigError(f"{path}: missing profile header {MAGIC!r}")
    head = json.loads(text[1][2:])
    data = np.loadtxt(text[3:], ndmin=2)
    grid = RadialGrid(head["R_max"], head["h"], int(head["N"]))
    if data.shape[0] != grid.n:
        raise ConfigError(f"{path}: expected {grid.n} rows, found {data.shape[0]}")
    return RadialProfile(grid, data[:, 1].copy(), head)
