"""Numerics for two-component cubic Schrödinger systems with one concentrating component.

The slow component solves a scalar ground-state problem and stays spread
out; the fast component concentrates as two spikes near the origin at
distance of order ``eps ln(1/eps)``.  The package builds that ansatz on a
two-scale discretization, measures its error, solves the projected
correction problem, locates the peak distance through the reduced
coefficient, and confirms the picture with a full Newton solve.
"""
from .ansatz import ModelParams, Pipeline, eval_error_terms
from .domain import Resolution
from .errors import (AssumptionError, ConfigError, GroundStateError, NonConvergenceError, RegimeError,
                     SingularFactorizationError, SpikelabError)
from .groundstate import GroundState, RadialProfile, check_nondegeneracy, solve_ground_state
from .potentials import PotentialSpec

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "Pipeline",
    "Resolution",
    "PotentialSpec",
    "GroundState",
    "RadialProfile",
    "solve_ground_state",
    "check_nondegeneracy",
    "eval_error_terms",
    "SpikelabError",
    "ConfigError",
    "AssumptionError",
    "NonConvergenceError",
    "GroundStateError",
    "SingularFactorizationError",
    "RegimeError",
]
