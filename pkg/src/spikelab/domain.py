"""Two-scale discretization: a slow grid in x and a fast grid in y = x/eps."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .grids import SymmetricField, SymmetricGrid
from .operators import build_laplacian_symmetric, transfer_matrix

__all__ = ["Resolution", "TwoScaleDomain", "make_domain"]


@dataclass(frozen=True)
class Resolution:
    """Discretization controls, lengths in units of the relevant decay length.

    Parameters
    ----------
    fast_h : float
        Fast-grid spacing in units of ``1/sqrt(omega0)``.
    fast_margin : float
        Fast-grid extent beyond the farthest admissible peak, same units.
    d_max : float
        Largest peak-law coefficient the fast grid must hold, in units of
        ``1/sqrt(omega0)``.
    slow_extent : float
        Slow-grid half-width in units of ``1/sqrt(inf V)``.
    slow_growth : float
        Relative spacing growth of the stretched slow grid.
    radial_h : float
        Radial profile spacing in decay lengths.
    """

    fast_h: float = 0.1
    fast_margin: float = 20.0
    d_max: float = 1.5
    slow_extent: float = 23.0
    slow_growth: float = 0.02
    radial_h: float = 0.01

    def __post_init__(self):
        for name in ("fast_h", "fast_margin", "d_max", "slow_extent", "slow_growth", "radial_h"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"resolution.{name} must be positive")


@dataclass(eq=False)
class TwoScaleDomain:
    """Slow grid, fast grid, and the interpolation operators between them.

    ``to_fast`` samples a slow field at ``eps * y`` for every fast node;
    ``to_slow`` samples a fast field at ``x / eps`` for every slow node.
    """

    slow: SymmetricGrid
    fast: SymmetricGrid
    eps: float

    @cached_property
    def to_fast(self) -> sp.csr_matrix:
        f = self.fast
        return transfer_matrix(self.slow, self.eps * f.x1[:-1], self.eps * f.x2[:-1])

    @cached_property
    def to_slow(self) -> sp.csr_matrix:
        s = self.slow
        return transfer_matrix(self.fast, s.x1[:-1] / self.eps, s.x2[:-1] / self.eps)

    @cached_property
    def neg_lap_slow(self) -> sp.csr_matrix:
        return -build_laplacian_symmetric(self.slow)

    @cached_property
    def neg_lap_fast(self) -> sp.csr_matrix:
        return -build_laplacian_symmetric(self.fast)

    def slow_at_fast(self, f: SymmetricField | np.ndarray) -> np.ndarray:
        v = f.values if isinstance(f, SymmetricField) else f
        return (self.to_fast @ v.ravel()).reshape(self.fast.shape)

    def fast_at_slow(self, f: SymmetricField | np.ndarray) -> np.ndarray:
        v = f.values if isinstance(f, SymmetricField) else f
        return (self.to_slow @ v.ravel()).reshape(self.slow.shape)


def make_domain(eps: float, omega0: float, inf_v: float, N: int,
                res: Resolution = Resolution()) -> TwoScaleDomain:
    """Grids sized for the peak-law window at this ``eps``.

    The slow grid is stretched, with spacing at the origin equal to the fast
    spacing mapped back by ``eps``, so both grids resolve the spike equally.
    """
    if not (0 < eps < 1):
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    lf = 1.0 / np.sqrt(omega0)
    hf = res.fast_h * lf
    Lf = res.d_max * lf * np.log(1.0 / eps) + res.fast_margin * lf
    fast = SymmetricGrid.uniform(Lf, Lf - res.d_max * lf * np.log(1.0 / eps), hf, N)
    Ls = res.slow_extent / np.sqrt(inf_v)
    slow = SymmetricGrid.stretched(Ls, Ls, eps * hf, res.slow_growth, N)
    return TwoScaleDomain(slow, fast, eps)
