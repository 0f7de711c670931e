"""Reduced coefficient, its constants, the peak-distance root and the full solve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .ansatz import AnsatzBundle, ErrorFields, Pipeline, eval_error_terms
from .corrector import (RemainderPair, full_jacobian, full_residual, projection_multiplier,
                        residual_norm, solve_projected)
from .errors import ConfigError, NonConvergenceError, RegimeError, SpikelabError
from .groundstate import GroundState
from .grids import SymmetricField
from .operators import factorize, radial_derivative
from .overlap import OverlapQuery, RateFit, fit_rate, theta_integral, theta_prediction, theta_window

__all__ = [
    "ReducedConstants",
    "C0Evaluation",
    "FullSolution",
    "compute_b",
    "compute_c",
    "fit_c",
    "model_residual",
    "model_reduced_root",
    "leading_errors",
    "c0_of_d",
    "find_root_d",
    "extract_peak",
    "count_peaks",
    "full_solve",
]


@dataclass(frozen=True)
class ReducedConstants:
    """Constants of the two-term balance for the peak distance."""

    b: float
    c: float
    d11_omega0: float
    mu2: float
    omega0: float
    N: int

    def __post_init__(self):
        if not (self.b > 0 and self.c > 0):
            raise ConfigError("b and c must be positive")
        if not self.d11_omega0 < 0:
            raise ConfigError("the curvature of omega at the origin must be negative")
        if not (self.mu2 > 0 and self.omega0 > 0):
            raise ConfigError("mu2 and omega0 must be positive")

    @classmethod
    def toy(cls, N: int = 2) -> "ReducedConstants":
        return cls(1.0, 1.0, -1.0, 1.0, 1.0, N)


def compute_b(U: GroundState) -> float:
    """``-int y1^2 U U'(|y|) / |y| dy``, reduced to a radial integral.

    The angular average of ``y1^2`` is ``r^2 / N``.
    """
    g = U.grid
    u = U.profile.values
    du = radial_derivative(g, u)
    val = -float(np.sum(g.weights * g.r * u * du)) / U.N
    if not val > 0:
        raise SpikelabError(f"b = {val:.4g} is not positive; the profile is not decreasing")
    return val


def fit_c(U: GroundState, lam: float | None = None, n: int = 13) -> RateFit:
    """Prefactor fit of the (1, 3) overlap over six to twelve decay lengths."""
    lam = float(U.potential.radial(0.0, U.N)) if lam is None else lam
    zs = theta_window(lam, n=n)
    th = [theta_integral(OverlapQuery(U.profile, 1, 3, z, U.N, lam, U.mu)) for z in zs]
    return fit_rate(zs, th, theta_prediction(1, 3, U.N, lam))


def compute_c(U: GroundState, max_drift: float = 0.15) -> float:
    """Prefactor of the (1, 3) overlap against its exponential-algebraic form.

    Raises
    ------
    RegimeError
        If the prefactor drifts by more than ``max_drift`` over the window.
    """
    f = fit_c(U)
    if f.drift > max_drift:
        raise RegimeError(f"overlap prefactor drifts by {f.drift:.1%}; asymptotic regime not reached")
    return f.prefactor


def model_residual(rho, eps: float, k: ReducedConstants):
    rho = np.asarray(rho, dtype=float)
    x = rho / eps
    return (-k.d11_omega0 * k.b * eps * rho
            - 2 * k.mu2 * k.c * np.exp(-2 * np.sqrt(k.omega0) * x) * x ** (-(k.N - 1) / 2))


def model_reduced_root(eps: float, k: ReducedConstants) -> float:
    """Root in ``rho`` of the two-term balance, by bisection.

    The residual increases strictly in ``rho``, so a sign change on
    ``(0, 10 eps ln(1/eps))`` brackets a unique root.

    Raises
    ------
    RegimeError
        If the bracket shows no sign change.
    """
    if not (0 < eps < 1):
        raise ConfigError("eps must lie in (0, 1)")
    hi = 10 * eps * np.log(1 / eps)
    lo = 1e-6 * hi
    if not (model_residual(lo, eps, k) < 0 < model_residual(hi, eps, k)):
        raise RegimeError(f"no sign change of the reduced balance at eps={eps}")
    return float(optimize.bisect(model_residual, lo, hi, args=(eps, k), xtol=1e-14 * eps, rtol=1e-14,
                                 maxiter=400))


LEADING_TERMS = ("potential", "overlap_cubic")


def leading_errors(errors: ErrorFields) -> ErrorFields:
    """Keep only the potential and bump-overlap parts of the fast error."""
    sg = errors.E1.grid
    E2 = sum((errors.terms2[k] for k in LEADING_TERMS[1:]), errors.terms2[LEADING_TERMS[0]])
    return ErrorFields(sg.zeros(), E2, {}, {k: errors.terms2[k] for k in LEADING_TERMS})


@dataclass(eq=False)
class C0Evaluation:
    eps: float
    d: float
    t: float
    projection: float
    pair: RemainderPair
    bundle: AnsatzBundle
    errors: ErrorFields


def c0_of_d(pipe: Pipeline, eps: float, d: float, leading_only: bool = False, **kw) -> C0Evaluation:
    """Multiplier of the projected solve at peak coefficient ``d``."""
    b = pipe.ansatz(eps, d)
    E = eval_error_terms(b)
    if leading_only:
        E = leading_errors(E)
    pair = solve_projected(b, E, **kw)
    return C0Evaluation(eps, float(d), pair.t, projection_multiplier(b, E, pair), pair, b, E)


def find_root_d(pipe: Pipeline, eps: float, bracket: tuple[float, float] | None = None,
                xtol: float = 2e-3, leading_only: bool = False) -> C0Evaluation:
    """Bracketed root of the multiplier in ``d``.

    ``bracket`` defaults to ``(0.8, 1.2) / sqrt(omega0)``; without a sign
    change it is moved in steps of ``0.2 / sqrt(omega0)``, upward while the
    multiplier is positive (bounded by the grid window) and downward while
    it is negative.  Brent's method
    keeps the sign-change bracket at every step, so each iterate stays as
    safe as bisection while needing fewer pipeline runs.
    """
    bg = pipe.background(eps)
    s = 1.0 / np.sqrt(bg.omega.omega0)
    lo, hi = (0.8 * s, 1.2 * s) if bracket is None else bracket
    cache: dict[float, C0Evaluation] = {}

    def g(d):
        ev = c0_of_d(pipe, eps, d, leading_only)
        cache[float(d)] = ev
        return ev.t

    glo, ghi = g(lo), g(hi)
    # widen toward the side the multiplier points to, within the grid window
    d_max = pipe.res.d_max * s
    while np.sign(glo) == np.sign(ghi) and glo > 0 and hi < d_max - 1e-12:
        lo, glo = hi, ghi
        hi = min(hi + 0.2 * s, d_max)
        ghi = g(hi)
    while np.sign(glo) == np.sign(ghi) and ghi < 0 and lo > 0.41 * s:
        hi, ghi = lo, glo
        lo = lo - 0.2 * s
        glo = g(lo)
    if np.sign(glo) == np.sign(ghi):
        raise RegimeError(f"multiplier keeps one sign up to d = {hi:.4g} at eps={eps}")
    root = optimize.brentq(g, lo, hi, xtol=xtol * s, rtol=1e-10, maxiter=60)
    return cache[float(root)] if float(root) in cache else c0_of_d(pipe, eps, root, leading_only)


def extract_peak(v: SymmetricField) -> float:
    """Sub-grid position of the maximum of ``v`` on the positive x1 axis.

    A three-point parabola through the discrete maximum and its two
    neighbors; at the origin the mirror node serves as left neighbor.
    """
    x, f = v.along_axis()
    k = int(np.argmax(f))
    if k == 0:
        return 0.0
    h0, h1 = x[k] - x[k - 1], x[k + 1] - x[k]
    if not np.isclose(h0, h1):
        raise SpikelabError("peak extraction needs a uniform grid near the peak")
    den = f[k - 1] - 2 * f[k] + f[k + 1]
    off = 0.5 * (f[k - 1] - f[k + 1]) / den if den != 0 else 0.0
    return float(x[k] + off * h0)


def count_peaks(v: SymmetricField) -> int:
    """Number of strict local maxima of the mirrored field over the plane."""
    _, _, full = v.unfold()
    c = full[1:-1, 1:-1]
    is_max = np.ones_like(c, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_max &= c > full[1 + di:full.shape[0] - 1 + di, 1 + dj:full.shape[1] - 1 + dj]
    return int(is_max.sum())


@dataclass(eq=False)
class FullSolution:
    u: SymmetricField
    v: SymmetricField
    residual: float
    residuals_max: tuple[float, float]
    peak: float
    rho_hat: float
    n_peaks: int
    profile_gap: float
    u_gap: float
    iterations: int
    d_hat: float
    eps: float

    @property
    def peaks(self) -> tuple[float, float]:
        return (-self.rho_hat, self.rho_hat)

    @property
    def positive(self) -> bool:
        return bool(self.u.values.min() > 0 and self.v.values.min() > 0)


def full_solve(pipe: Pipeline, eps: float, d: float | None = None, *, root: C0Evaluation | None = None,
               tol: float = 1e-9, max_iter: int = 30) -> FullSolution:
    """Newton on the unprojected coupled system, started from ansatz plus remainder.

    Parameters
    ----------
    pipe : Pipeline
    eps : float
    d : float, optional
        Peak coefficient of the initial guess; the multiplier root is found
        when neither ``d`` nor ``root`` is given.
    root : C0Evaluation, optional
        A solved projected problem to start from.
    tol : float
        Target for the quadrature-weighted L2 residual.

    Raises
    ------
    RegimeError
        If the two bumps merge into a single maximum at the origin.
    NonConvergenceError
        If the residual stalls above ``tol``.
    """
    if root is None:
        if d is None:
            root = find_root_d(pipe, eps)
        else:
            root = c0_of_d(pipe, eps, d)
    b, pair = root.bundle, root.pair
    ns = b.domain.slow.size
    u = b.Xi.values.ravel() + pair.phi.values.ravel()
    v = b.Theta.values.ravel() + pair.psi.values.ravel()

    def size(F):
        return residual_norm(b, *F)

    F = full_residual(b, u, v)
    res = size(F)
    it = 0
    while res > tol and it < max_iter:
        it += 1
        dx = factorize(full_jacobian(b, u, v)).solve(-np.concatenate(F))
        step = 1.0
        while True:
            ut, vt = u + step * dx[:ns], v + step * dx[ns:]
            Ft = full_residual(b, ut, vt)
            rt = size(Ft)
            if rt < res or step < 1e-3:
                break
            step *= 0.5
        if rt >= res:
            break
        u, v, F, res = ut, vt, Ft, rt
    if res > tol:
        raise NonConvergenceError(f"full Newton stopped at residual {res:.3e} after {it} iterations")
    U = b.domain.slow.field(u)
    V = b.domain.fast.field(v)
    peak = extract_peak(V)
    npk = count_peaks(V)
    if peak == 0.0 or npk == 1:
        raise RegimeError(f"the two bumps merged into one at eps={eps}")
    gap_v = float(np.abs(v - b.Theta.values.ravel()).max() / np.abs(v).max())
    gap_u = float(np.abs(u - b.upsilon.values.ravel()).max() / np.abs(b.upsilon.values).max())
    return FullSolution(U, V, res, (float(np.abs(F[0]).max()), float(np.abs(F[1]).max())), peak,
                        eps * peak, npk, gap_v, gap_u, it, b.d, eps)
