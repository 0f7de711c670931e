"""Overlap integrals of translated profiles and their exponential asymptotics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, SpikelabError
from .grids import sphere_area

__all__ = [
    "OverlapQuery",
    "RegimePrediction",
    "RateFit",
    "LogModelComparison",
    "theta_integral",
    "overlap_uv",
    "classify_regime",
    "theta_prediction",
    "fit_rate",
    "compare_log_models",
    "theta_window",
]

Radial = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OverlapQuery:
    """``int U^s(x + zeta e1) d/dx1 [U^t](x) dx`` for a radial profile ``U``.

    ``profile`` must provide ``__call__(r)`` and ``slope(r)``; a
    :class:`~spikelab.groundstate.RadialProfile` does.  ``lam`` and ``mu``
    record the scaling of the profile and feed the predicted rates only.
    """

    profile: object
    s: float
    t: float
    zeta: float
    N: int
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.s < 1 or self.t < 1:
            raise ConfigError("overlap powers must be >= 1")
        if self.N not in (1, 2, 3):
            raise ConfigError("N must be 1, 2 or 3")


def _support(profile) -> float:
    grid = getattr(profile, "grid", None)
    return float(grid.R_max) if grid is not None else 40.0


def _quadrature(f, zeta: float, R: float, N: int, h: float) -> float:
    """Integrate ``f(x1, rho)`` over R^N, axisymmetric about the x1 axis.

    The x1 range covers both supports, centered at ``-zeta`` and at 0.
    """
    lo = min(-zeta, 0.0) - R
    hi = max(-zeta, 0.0) + R
    x1 = np.linspace(lo, hi, int(np.ceil((hi - lo) / h)) + 1)
    w1 = np.full(x1.size, x1[1] - x1[0])
    w1[[0, -1]] *= 0.5
    if N == 1:
        return float(w1 @ f(x1, np.zeros_like(x1)))
    rho = np.linspace(0.0, R, int(np.ceil(R / h)) + 1)
    w2 = np.full(rho.size, rho[1] - rho[0])
    w2[[0, -1]] *= 0.5
    w2 = w2 * sphere_area(N - 1) * rho ** (N - 2)
    X1, P = np.meshgrid(x1, rho, indexing="ij")
    return float(w1 @ f(X1, P) @ w2)


def theta_integral(q: OverlapQuery, h: float | None = None) -> float:
    """Quadrature of the shifted overlap in an axisymmetric reduction.

    The x1-derivative of ``U^t`` is formed by the chain rule,
    ``t U^(t-1) U'(r) x1 / r``.

    Raises
    ------
    SpikelabError
        If the shifted support does not fit the profile window.
    """
    R = _support(q.profile)
    if abs(q.zeta) > 2 * R:
        raise SpikelabError(f"shift {q.zeta} exceeds the resolved window of the profile")
    h = 0.02 / np.sqrt(q.lam) if h is None else h
    U = q.profile

    def f(x1, rho):
        rs = np.hypot(x1 + q.zeta, rho)
        r = np.hypot(x1, rho)
        safe = np.where(r > 0, r, 1.0)
        dut = np.where(r > 0, q.t * U(r) ** (q.t - 1) * U.slope(r) * x1 / safe, 0.0)
        return U(rs) ** q.s * dut

    return _quadrature(f, q.zeta, R, q.N, h)


def overlap_uv(u: Radial, v: Radial, zeta: float, N: int, R: float | None = None,
               h: float = 0.02) -> float:
    """``int u(|x - zeta e1|) v(|x|) dx`` by axisymmetric quadrature."""
    if R is None:
        R = min(_support(u), _support(v))

    def f(x1, rho):
        return u(np.hypot(x1 - zeta, rho)) * v(np.hypot(x1, rho))

    return _quadrature(f, -zeta, R, N, h)


@dataclass(frozen=True)
class RegimePrediction:
    """Predicted ``e^{-rate |zeta|} |zeta|^power (ln |zeta|)^log`` behavior."""

    label: str
    rate: float
    power: float
    log: bool


def classify_regime(u_tail: tuple[float, float], v_tail: tuple[float, float], N: int,
                    rtol: float = 1e-9) -> RegimePrediction:
    """Asymptotic form of ``int u(x - zeta) v(x)`` from tails ``|x|^a e^{-b|x|}``.

    Tails are ``(a, b)`` pairs.  With equal rates the pair is ordered so
    that ``a >= a'``.
    """
    (a, b), (a2, b2) = u_tail, v_tail
    if b <= 0 or b2 <= 0:
        raise ConfigError("tail rates must be positive")
    if abs(b - b2) > rtol * max(b, b2):
        if b > b2:
            a, b = a2, b2
        return RegimePrediction("slower-tail", b, a, False)
    if a < a2:
        a, a2 = a2, a
    crit = -(N + 1) / 2
    if np.isclose(a2, crit, rtol=0, atol=1e-12):
        return RegimePrediction("equal-rate-log", b, a, True)
    if a2 > crit:
        return RegimePrediction("equal-rate-sum", b, a + a2 + (N + 1) / 2, False)
    return RegimePrediction("equal-rate-dominant", b, a, False)


def theta_prediction(s: float, t: float, N: int, lam: float = 1.0) -> RegimePrediction:
    """Printed asymptotic form of the shifted overlap for powers ``s <= t``."""
    if s > t:
        raise ConfigError("prediction is stated for s <= t")
    rate = s * np.sqrt(lam)
    if s < t:
        return RegimePrediction("s<t", rate, -s * (N - 1) / 2, False)
    if N == 1:
        return RegimePrediction("s=t,below", rate, 1.0, False)
    crit = (N + 1) / (N - 1)
    if np.isclose(s, crit):
        return RegimePrediction("s=t,critical", rate, -s * (N - 1) / 2, True)
    if s < crit:
        return RegimePrediction("s=t,below", rate, -s * (N - 1) + (N + 1) / 2, False)
    return RegimePrediction("s=t,above", rate, -s * (N - 1) / 2, False)


@dataclass(frozen=True)
class RateFit:
    rate: float
    prefactor: float
    drift: float
    rms: float


def _reduced_log(zeta, values, power, log):
    z = np.asarray(zeta, dtype=float)
    y = np.log(np.abs(np.asarray(values, dtype=float))) - power * np.log(z)
    if log:
        y = y - np.log(np.log(z))
    return z, y


def fit_rate(zeta, values, pred: RegimePrediction) -> RateFit:
    """Fit ``ln|Theta|`` with the algebraic and log factors of ``pred`` removed.

    ``drift`` is the relative spread of the prefactor when the rate is held
    at its predicted value; it measures how far into the asymptotic regime
    the window lies.
    """
    z, y = _reduced_log(zeta, values, pred.power, pred.log)
    if z.size < 3:
        raise SpikelabError("rate fit needs at least 3 samples")
    slope, icpt = np.polyfit(z, y, 1)
    rms = float(np.sqrt(np.mean((icpt + slope * z - y) ** 2)))
    C = np.exp(y + pred.rate * z)
    drift = float((C.max() - C.min()) / C.mean())
    return RateFit(float(-slope), float(C.mean()), drift, rms)


@dataclass(frozen=True)
class LogModelComparison:
    rss_plain: float
    rss_log: float
    q_hat: float

    @property
    def prefers_log(self) -> bool:
        return self.rss_log < self.rss_plain


def compare_log_models(zeta, values, rate: float, power: float) -> LogModelComparison:
    """Compare ``c + power ln z`` with ``c + power ln z + q ln ln z`` at ``q = 1``.

    Both models have one free constant after the exponential factor is
    removed.  ``q_hat`` is the least-squares exponent of the enclosing
    two-parameter model.
    """
    z, y = _reduced_log(zeta, values, power, False)
    y = y + rate * z
    ll = np.log(np.log(z))
    rss_plain = float(np.sum((y - y.mean()) ** 2))
    r = y - ll
    rss_log = float(np.sum((r - r.mean()) ** 2))
    A = np.column_stack([np.ones_like(z), ll])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return LogModelComparison(rss_plain, rss_log, float(coef[1]))


def theta_window(lam: float, lo: float = 6.0, hi: float = 12.0, n: int = 13) -> np.ndarray:
    """Shifts spanning ``[lo, hi]`` decay lengths."""
    return np.linspace(lo, hi, n) / np.sqrt(lam)
