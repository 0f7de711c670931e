"""Radial and symmetry-reduced tensor grids, and fields living on them.

Every field in the model is even in each Cartesian variable, so only one
quadrant (N=2) or one half cylinder (N=3, axisymmetric about the x1 axis) is
stored.  The outermost node of each axis carries a homogeneous Dirichlet
condition and is not an unknown; the node at the origin is reflected evenly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError

__all__ = ["RadialGrid", "SymmetricGrid", "SymmetricField", "sphere_area"]


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N=1)."""
    return {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[N]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes ``r_i = i h`` on ``[0, R_max]``.

    The node at ``R_max`` is a Dirichlet node; ``h`` is adjusted slightly so
    that the last node lands exactly on ``R_max``.
    """

    R_max: float
    h: float
    N: int

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise ConfigError(f"dimension N must be 1, 2 or 3, got {self.N}")
        if not (self.h > 0 and self.R_max > 0):
            raise ConfigError("radial grid needs h > 0 and R_max > 0")
        if self.h >= self.R_max:
            raise ConfigError(f"h={self.h} must be smaller than R_max={self.R_max}")
        n = int(round(self.R_max / self.h))
        object.__setattr__(self, "h", self.R_max / n)

    @property
    def n(self) -> int:
        """Number of unknowns (the Dirichlet node excluded)."""
        return int(round(self.R_max / self.h))

    @cached_property
    def r(self) -> np.ndarray:
        """Nodes carrying unknowns, ``r_0 = 0`` up to ``R_max - h``."""
        return np.arange(self.n) * self.h

    @cached_property
    def r_all(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal weights for integrals over R^N of radial functions."""
        w = np.full(self.n, self.h)
        w[0] = 0.5 * self.h
        return sphere_area(self.N) * w * self.r ** (self.N - 1)


def _sinh_axis(L: float, h0: float, growth: float) -> np.ndarray:
    # x_i = ell * sinh(i * growth): spacing ~h0 near 0, ~growth * x far out
    ell = h0 / growth
    n = int(np.ceil(np.arcsinh(L / ell) / growth))
    ell = L / np.sinh(n * growth)
    return ell * np.sinh(growth * np.arange(n + 1))


@dataclass(frozen=True, eq=False)
class SymmetricGrid:
    """Tensor grid on the symmetry-reduced domain.

    Parameters
    ----------
    x1, x2 : ndarray
        Increasing axis nodes starting at 0.  The last entry of each is the
        Dirichlet node.  For ``N=3`` the second axis is the distance from the
        x1 axis.
    N : int
        Ambient dimension, 2 or 3.
    """

    x1: np.ndarray
    x2: np.ndarray
    N: int
    kind: str = field(default="custom")

    def __post_init__(self):
        if self.N not in (2, 3):
            raise ConfigError(f"symmetric grids support N=2 or N=3, got {self.N}")
        for ax in (self.x1, self.x2):
            if ax[0] != 0.0 or np.any(np.diff(ax) <= 0) or ax.size < 4:
                raise ConfigError("axis nodes must start at 0, increase, and have >= 4 nodes")

    @classmethod
    def uniform(cls, L1: float, L2: float, h: float, N: int = 2) -> "SymmetricGrid":
        n1, n2 = int(round(L1 / h)), int(round(L2 / h))
        return cls(np.linspace(0.0, L1, n1 + 1), np.linspace(0.0, L2, n2 + 1), N, "uniform")

    @classmethod
    def stretched(cls, L1: float, L2: float, h0: float, growth: float = 0.02,
                  N: int = 2) -> "SymmetricGrid":
        """Nodes ``ell sinh(i growth)``: spacing ``h0`` at the origin."""
        if not (0 < growth < 0.5):
            raise ConfigError("growth must lie in (0, 0.5)")
        return cls(_sinh_axis(L1, h0, growth), _sinh_axis(L2, h0, growth), N, "stretched")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x1.size - 1, self.x2.size - 1)

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        return (float(self.x1[-1]), float(self.x2[-1]))

    @property
    def h_min(self) -> float:
        return float(min(self.x1[1], self.x2[1]))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1[:-1], self.x2[:-1], indexing="ij")

    @cached_property
    def radius(self) -> np.ndarray:
        X1, X2 = self.mesh
        return np.hypot(X1, X2)

    def axis_weights(self, axis: int) -> np.ndarray:
        """Half-line trapezoidal weights of the active nodes along ``axis``."""
        x = self.x1 if axis == 0 else self.x2
        w = 0.5 * (x[2:] - x[:-2])
        return np.concatenate([[0.5 * x[1]], w])

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights for integrals over the full, unreduced domain."""
        w1 = 2.0 * self.axis_weights(0)
        if self.N == 2:
            w2 = 2.0 * self.axis_weights(1)
        else:
            w2 = 2.0 * np.pi * self.x2[:-1] * self.axis_weights(1)
        return np.outer(w1, w2)

    def field(self, values) -> "SymmetricField":
        return SymmetricField(np.asarray(values, dtype=float).reshape(self.shape), self)

    def zeros(self) -> "SymmetricField":
        return SymmetricField(np.zeros(self.shape), self)


@dataclass(eq=False)
class SymmetricField:
    """Nodal values of an even function on the active nodes of a grid."""

    values: np.ndarray
    grid: SymmetricGrid

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    @property
    def origin(self) -> float:
        return float(self.values[0, 0])

    def integrate(self) -> float:
        return float(np.sum(self.grid.weights * self.values))

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(self.grid.weights * self.values**2)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def dot(self, other: "SymmetricField") -> float:
        return float(np.sum(self.grid.weights * self.values * other.values))

    def along_axis(self) -> tuple[np.ndarray, np.ndarray]:
        """Values on the x1 axis including the Dirichlet node."""
        return self.grid.x1, np.append(self.values[:, 0], 0.0)

    def unfold(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Mirror to the full cross-section, returning ``(x1, x2, values)``."""
        x1 = np.concatenate([-self.grid.x1[:0:-1], self.grid.x1])
        x2 = np.concatenate([-self.grid.x2[:0:-1], self.grid.x2])
        v = np.pad(self.values, ((0, 1), (0, 1)))
        v = np.concatenate([v[:0:-1], v], axis=0)
        v = np.concatenate([v[:, :0:-1], v], axis=1)
        return x1, x2, v

    def __add__(self, other):
        o = other.values if isinstance(other, SymmetricField) else other
        return SymmetricField(self.values + o, self.grid)

    def __sub__(self, other):
        o = other.values if isinstance(other, SymmetricField) else other
        return SymmetricField(self.values - o, self.grid)

    def __mul__(self, other):
        o = other.values if isinstance(other, SymmetricField) else other
        return SymmetricField(self.values * o, self.grid)

    __rmul__ = __mul__
