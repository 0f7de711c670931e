"""Trapping potentials for the two components."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AssumptionError, ConfigError
from .grids import SymmetricGrid

__all__ = ["PotentialSpec"]

_KINDS = ("constant", "power", "quadratic", "tabulated")


@dataclass(frozen=True)
class PotentialSpec:
    """A potential that is even in each Cartesian variable.

    Kinds and their parameters:

    ``constant``   ``value``
    ``power``      ``value + coeff * |x|**exponent``
    ``quadratic``  ``value + sum(a[i] * x_i**2)``
    ``tabulated``  radial table ``(table_r, table_v)``, linearly interpolated
                   and held constant past the last entry
    """

    kind: str = "constant"
    value: float = 1.0
    coeff: float = 0.0
    exponent: float = 2.0
    a: tuple[float, ...] = ()
    table_r: tuple[float, ...] = ()
    table_v: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "table_r", tuple(float(v) for v in self.table_r))
        object.__setattr__(self, "table_v", tuple(float(v) for v in self.table_v))
        if self.kind == "power" and self.exponent <= 0:
            raise ConfigError("power potential needs exponent > 0")
        if self.kind == "quadratic" and not self.a:
            raise ConfigError("quadratic potential needs coefficients 'a'")
        if self.kind == "tabulated":
            r = np.asarray(self.table_r)
            if r.size < 2 or r.size != len(self.table_v) or r[0] != 0 or np.any(np.diff(r) <= 0):
                raise ConfigError("tabulated potential needs increasing table_r from 0 and matching table_v")

    @classmethod
    def constant(cls, value: float) -> "PotentialSpec":
        return cls("constant", value=float(value))

    def is_radial(self, N: int) -> bool:
        if self.kind != "quadratic":
            return True
        a = self._coeffs(N)
        return bool(np.all(a == a[0]))

    def _coeffs(self, N: int) -> np.ndarray:
        a = np.asarray(self.a, dtype=float)
        if a.size == 1:
            a = np.full(N, a[0])
        if a.size != N:
            raise ConfigError(f"quadratic potential has {a.size} coefficients for N={N}")
        return a

    def radial(self, r, N: int) -> np.ndarray:
        """Values at distance ``r`` from the origin (radial kinds only)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.full_like(r, self.value)
        if self.kind == "power":
            return self.value + self.coeff * r**self.exponent
        if self.kind == "tabulated":
            return np.interp(r, self.table_r, self.table_v)
        if not self.is_radial(N):
            raise ConfigError("anisotropic quadratic potential has no radial profile")
        return self.value + self._coeffs(N)[0] * r**2

    def cartesian(self, x1, xt, N: int) -> np.ndarray:
        """Values at axial coordinate ``x1`` and transverse distance ``xt``.

        For ``N=2`` ``xt`` is ``x2``; for ``N=3`` it is the distance from the
        x1 axis, which requires equal transverse quadratic coefficients.
        """
        x1 = np.asarray(x1, dtype=float)
        xt = np.asarray(xt, dtype=float)
        if self.kind != "quadratic":
            return self.radial(np.hypot(x1, xt), N)
        a = self._coeffs(N)
        if N == 3 and a[1] != a[2]:
            raise ConfigError("half-cylinder reduction needs a[1] == a[2]")
        return self.value + a[0] * x1**2 + a[1] * xt**2

    def on_grid(self, grid: SymmetricGrid, scale: float = 1.0) -> np.ndarray:
        """Values at ``scale * x`` for every active node of ``grid``."""
        X1, X2 = grid.mesh
        return self.cartesian(scale * X1, scale * X2, grid.N)

    def require_positive(self, values: np.ndarray, what: str = "potential") -> float:
        m = float(np.min(values))
        if not m > 0:
            raise AssumptionError(f"{what} has non-positive infimum {m:.4g} on the grid")
        return m

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown potential keys: {sorted(extra)}")
        return cls(**d)
