"""Model parameters, effective potential, two-spike ansatz and its error."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .corrections import (KernelElement, PhiSolver, assemble_psi_eps, assemble_Z, solve_phi,
                          solve_psi_profile, two_bumps)
from .domain import Resolution, TwoScaleDomain, make_domain
from .errors import AssumptionError, ConfigError, SpikelabError
from .groundstate import (GroundState, RadialProfile, default_radial_grid, solve_ground_state,
                          solve_ground_state_on_grid)
from .grids import RadialGrid, SymmetricField
from .potentials import PotentialSpec

__all__ = [
    "ModelParams",
    "EffectivePotential",
    "AnsatzBundle",
    "ErrorFields",
    "ScalingFit",
    "Pipeline",
    "effective_potential",
    "peak_law",
    "eval_error_terms",
    "scaling_fit",
    "holder_constant",
]


@dataclass(frozen=True)
class ModelParams:
    """Scalar data of the coupled system.

    ``d`` is the peak-law coefficient; ``None`` selects ``1/sqrt(omega0)``.
    """

    mu1: float = 1.0
    mu2: float = 1.0
    beta: float = -1.0
    eps: float = 0.05
    d: float | None = None
    N: int = 2
    V: PotentialSpec = field(default_factory=lambda: PotentialSpec.constant(1.0))
    W: PotentialSpec = field(default_factory=lambda: PotentialSpec.constant(1.0))

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise ConfigError("mu1 and mu2 must be positive")
        if self.beta > 0:
            raise ConfigError(f"the construction needs beta <= 0, got {self.beta}")
        if not (0 < self.eps < 1):
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.d is not None and not self.d > 0:
            raise ConfigError("d must be positive")
        if self.N not in (1, 2, 3):
            raise ConfigError(f"N must be 1, 2 or 3, got {self.N}")

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class EffectivePotential:
    """``omega = W - beta Upsilon^2`` and its data at the origin."""

    omega: Callable
    omega0: float
    d11_omega0: float
    d11_W: float
    upsilon0: float
    d11_upsilon0: float
    min_pot_holds: bool
    ipobeta_threshold: float
    ipobeta_binding: bool

    @property
    def decay(self) -> float:
        return float(np.sqrt(self.omega0))


def _second_difference(f: Callable, h: float) -> float:
    x = h * np.arange(-2, 3)
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    return float(c @ f(x))


def effective_potential(W: PotentialSpec, beta: float, Y: GroundState,
                        upsilon0: float | None = None) -> EffectivePotential:
    """Sample ``omega`` and take its curvature along x1 at the origin.

    Parameters
    ----------
    W : PotentialSpec
    beta : float
    Y : GroundState
        Radial slow ground state; its nodes feed the five-point stencil.
    upsilon0 : float, optional
        Value of ``Upsilon(0)`` to use for ``omega0``; pass the origin value
        of a grid solution to keep ``omega0`` consistent with that grid.

    Raises
    ------
    AssumptionError
        If ``omega0 <= 0``.
    """
    N = Y.N
    y0 = Y.peak_value if upsilon0 is None else float(upsilon0)
    h = 5.0 * Y.grid.h  # stencil on radial nodes, so the profile is not interpolated
    w_axis = lambda x: W.cartesian(x, np.zeros_like(x), max(N, 2)) if N > 1 else W.radial(x, 1)
    d11W = _second_difference(w_axis, h)
    d11Y = _second_difference(lambda x: Y.profile(x), h)
    d11w = _second_difference(lambda x: w_axis(x) - beta * Y.profile(x) ** 2, h)
    omega0 = float(w_axis(np.zeros(1))[0] - beta * y0**2)
    if omega0 <= 0:
        raise AssumptionError(f"omega0 = {omega0:.4g} is not positive")

    def omega(x1, xt=0.0):
        x1 = np.asarray(x1, dtype=float)
        xt = np.asarray(xt, dtype=float)
        return W.cartesian(x1, xt, max(N, 2)) - beta * Y.profile(np.hypot(x1, xt)) ** 2

    thr = -d11W / (2.0 * y0 * abs(d11Y)) if d11Y != 0 else -np.inf
    return EffectivePotential(omega, omega0, d11w, d11W, y0, d11Y, d11w < 0, float(thr), d11W > 0)


def peak_law(eps: float, d: float) -> float:
    """Distance ``d eps ln(1/eps)`` of each peak from the origin."""
    if not (0 < eps < 1):
        raise ConfigError(f"peak law needs eps in (0, 1), got {eps}")
    if not d > 0:
        raise ConfigError("peak law needs d > 0")
    return d * eps * np.log(1.0 / eps)


@dataclass(eq=False)
class AnsatzBundle:
    """The two-spike approximate solution on its two grids.

    Slow-grid fields: ``upsilon``, ``phi``, ``Xi`` and the images of the fast
    fields at ``x/eps`` (``U_slow``, ``psi_slow``, ``Theta_slow``).
    Fast-grid fields: ``U_eps``, ``psi_eps``, ``Theta``, ``Z`` and the images
    of slow fields at ``eps y``.
    """

    params: ModelParams
    domain: TwoScaleDomain
    omega: EffectivePotential
    Y: GroundState
    U: GroundState
    psi_profile: RadialProfile
    upsilon: SymmetricField
    phi: SymmetricField
    Xi: SymmetricField
    U_eps: SymmetricField
    U_plus: np.ndarray
    U_minus: np.ndarray
    psi_eps: SymmetricField
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    Theta: SymmetricField
    Z: KernelElement
    shift: float
    rho: float
    V_slow: np.ndarray
    W_fast: np.ndarray

    @property
    def eps(self) -> float:
        return self.params.eps

    @property
    def d(self) -> float:
        return self.params.d

    def fast_image(self, f) -> np.ndarray:
        return self.domain.slow_at_fast(f)

    def slow_image(self, f) -> np.ndarray:
        return self.domain.fast_at_slow(f)


@dataclass(eq=False)
class _Background:
    domain: TwoScaleDomain
    upsilon: SymmetricField
    omega: EffectivePotential
    U: GroundState
    psi_profile: RadialProfile
    phi_solver: PhiSolver
    V_slow: np.ndarray
    W_fast: np.ndarray


class Pipeline:
    """Builds ansatz bundles for a fixed model at varying ``(eps, d)``.

    Everything that depends only on ``eps`` (grids, the slow ground state on
    the slow grid, the fast ground state, the factored correction operator)
    is cached, so scanning ``d`` at fixed ``eps`` costs one slow solve each.
    ``check_assumptions=False`` skips the curvature test on ``omega``, for
    equation-level checks such as the decoupled case ``beta = 0``.
    """

    def __init__(self, params: ModelParams, resolution: Resolution | None = None,
                 check_assumptions: bool = True):
        if params.N not in (2, 3):
            raise ConfigError("the two-scale pipeline supports N=2 and N=3")
        self.params = params
        self.res = Resolution() if resolution is None else resolution
        V = params.V
        lam = float(V.radial(0.0, params.N))
        self.Y = solve_ground_state(V, params.mu1, grid=default_radial_grid(lam, params.N, self.res.radial_h))
        self.omega_radial = effective_potential(params.W, params.beta, self.Y)
        if check_assumptions and not self.omega_radial.min_pot_holds:
            raise AssumptionError(
                f"omega has curvature {self.omega_radial.d11_omega0:.4g} >= 0 along x1 at the origin")
        self._cache: dict[float, _Background] = {}

    @property
    def omega0(self) -> float:
        return self.omega_radial.omega0

    def background(self, eps: float) -> _Background:
        key = float(eps)
        if key in self._cache:
            return self._cache[key]
        p, res = self.params, self.res
        inf_v = float(np.min(p.V.radial(np.linspace(0, 50, 501), p.N)))
        dom = make_domain(eps, self.omega0, inf_v, p.N, res)
        V_slow = p.V.on_grid(dom.slow)
        p.V.require_positive(V_slow, "V")
        ups = solve_ground_state_on_grid(self.Y, dom.slow)
        om = effective_potential(p.W, p.beta, self.Y, upsilon0=ups.origin)
        lam = om.omega0
        L1, L2 = dom.fast.extent
        R = float(np.hypot(2 * L1, L2)) + 1.0
        grid = RadialGrid(R, res.radial_h / np.sqrt(lam), p.N)
        U = solve_ground_state(PotentialSpec.constant(lam), p.mu2, grid=grid)
        psi = solve_psi_profile(U, lam, p.mu2)
        solver = PhiSolver(ups, p.V, p.mu1, dom.neg_lap_slow)
        W_fast = p.W.on_grid(dom.fast, scale=eps)
        bg = _Background(dom, ups, om, U, psi, solver, V_slow, W_fast)
        self._cache = {key: bg}  # keep one eps at a time; grids are large
        return bg

    def ansatz(self, eps: float | None = None, d: float | None = None) -> AnsatzBundle:
        p = self.params
        eps = p.eps if eps is None else float(eps)
        bg = self.background(eps)
        d = (p.d if p.d is not None else 1.0 / np.sqrt(bg.omega.omega0)) if d is None else float(d)
        params = p.with_(eps=eps, d=d)
        dom = bg.domain
        rho = peak_law(eps, d)
        shift = rho / eps
        if shift > self.res.d_max * np.log(1 / eps) / np.sqrt(bg.omega.omega0) + 1e-12:
            raise ConfigError(f"peak at {shift:.3g} fast units exceeds the grid window (raise d_max)")
        Um, Up = two_bumps(bg.U.profile, dom.fast, shift)
        U_eps = dom.fast.field(Um + Up)
        U_slow = dom.slow.field(dom.fast_at_slow(U_eps))
        phi = solve_phi(bg.upsilon, p.V, p.mu1, U_slow, bg.phi_solver)
        beta = p.beta
        psi_eps, psi_m, psi_p = assemble_psi_eps(bg.psi_profile, phi.origin, bg.upsilon.origin, beta,
                                                 shift, dom.fast, parts=True)
        Z = assemble_Z(bg.U, shift, dom.fast)
        Xi = bg.upsilon + beta * phi
        Theta = U_eps + beta * psi_eps
        return AnsatzBundle(params, dom, bg.omega, self.Y, bg.U, bg.psi_profile, bg.upsilon, phi, Xi,
                            U_eps, Up, Um, psi_eps, psi_p, psi_m, Theta, Z, shift, rho,
                            bg.V_slow, bg.W_fast)


@dataclass(eq=False)
class ErrorFields:
    E1: SymmetricField
    E2: SymmetricField
    terms1: dict
    terms2: dict

    @property
    def norms(self) -> tuple[float, float]:
        return (self.E1.norm_l2(), self.E2.norm_l2())

    def term_norms(self) -> list[tuple[str, str, float]]:
        rows = [("E1", k, v.norm_l2()) for k, v in self.terms1.items()]
        rows += [("E2", k, v.norm_l2()) for k, v in self.terms2.items()]
        return rows


def eval_error_terms(b: AnsatzBundle) -> ErrorFields:
    """Evaluate both error components term by term.

    The slow component lists every product left over when the ansatz is
    inserted into the first equation; the fast component contains the
    potential mismatch, the origin-modulus term, the bump-overlap terms and
    the higher products in the coupling constant.  The overlap term coupling
    the bumps to the correction keeps the cross products of each bump with
    the other bump's correction, so that ``E = -F(Xi, Theta)`` holds up to
    the discretization error of the fast ground state.
    """
    p = b.params
    beta, mu1, mu2 = p.beta, p.mu1, p.mu2
    sg, fg = b.domain.slow, b.domain.fast
    Y, F = b.upsilon.values, b.phi.values
    Us = b.slow_image(b.U_eps)
    Ps = b.slow_image(b.psi_eps)
    t1 = {
        "upsilon_phi_sq": 3 * mu1 * beta**2 * Y * F**2,
        "phi_cube": mu1 * beta**3 * F**3,
        "upsilon_U_psi": 2 * beta**2 * Y * Us * Ps,
        "upsilon_psi_sq": beta**3 * Y * Ps**2,
        "phi_U_sq": beta**2 * F * Us**2,
        "phi_U_psi": 2 * beta**3 * F * Us * Ps,
        "phi_psi_sq": beta**4 * F * Ps**2,
    }
    Yf = b.fast_image(b.upsilon)
    Ff = b.fast_image(b.phi)
    U, Up, Um = b.U_eps.values, b.U_plus, b.U_minus
    Ps_f, Th = b.psi_eps.values, b.Theta.values
    om = b.omega.omega0
    omega_fast = b.W_fast - beta * Yf**2
    t2 = {
        "potential": (om - omega_fast) * Th,
        "origin_modulus": 2 * beta**2 * U * (Yf * Ff - b.phi.origin * b.upsilon.origin),
        "overlap_cubic": mu2 * (U**3 - Up**3 - Um**3),
        "overlap_psi": 3 * beta * mu2 * (U**2 * Ps_f - Up**2 * b.psi_plus - Um**2 * b.psi_minus),
        "phi_sq_theta": beta**3 * Ff**2 * Th,
        "psi_upsilon_phi": 2 * beta**3 * Ps_f * Yf * Ff,
        "U_psi_sq": 3 * mu2 * beta**2 * U * Ps_f**2,
        "psi_cube": mu2 * beta**3 * Ps_f**3,
    }
    E1 = sg.field(sum(t1.values()))
    E2 = fg.field(sum(t2.values()))
    return ErrorFields(E1, E2, {k: sg.field(v) for k, v in t1.items()},
                       {k: fg.field(v) for k, v in t2.items()})


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    log_power: int
    n: int


def scaling_fit(eps, norms, log_correction_power: int = 0) -> ScalingFit:
    """Slope of ``ln(norm / |ln eps|^p)`` against ``ln eps``."""
    eps = np.asarray(eps, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if eps.size < 4 or eps.size != norms.size:
        raise SpikelabError(f"scaling fit needs at least 4 paired samples, got {eps.size}")
    if np.unique(eps).size != eps.size:
        raise SpikelabError("scaling fit needs distinct eps values")
    y = np.log(norms) - log_correction_power * np.log(np.abs(np.log(eps)))
    slope, icpt = np.polyfit(np.log(eps), y, 1)
    return ScalingFit(float(slope), float(icpt), int(log_correction_power), int(eps.size))


def holder_constant(b: AnsatzBundle, exponent: float = 0.5, radius: float = 5.0) -> float:
    """``max |Phi(eps y) - Phi(0)| / (eps^2 |y|^exponent)`` over ``0 < |y| <= radius``."""
    fg = b.domain.fast
    r = fg.radius
    mask = (r > 0) & (r <= radius)
    diff = np.abs(b.fast_image(b.phi) - b.phi.origin)
    return float(np.max(diff[mask] / (b.eps**2 * r[mask] ** exponent)))
