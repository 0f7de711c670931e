import numpy as np
import pytest

from spikelab.corrections import PhiSolver, assemble_psi_eps, assemble_Z, solve_psi_profile, two_bumps
from spikelab.errors import ConfigError
from spikelab.grids import SymmetricGrid
from spikelab.groundstate import rescale_ground_state
from spikelab.operators import integrate
from spikelab.potentials import PotentialSpec


@pytest.fixture(scope="module")
def U3(unit_ground_states):
    # omega0 = 3 is what beta = -1 and a unit slow state give in one dimension
    return rescale_ground_state(unit_ground_states[2], 3.0, 1.0)


def test_psi_is_minus_scaling_derivative(U3):
    """``-(U + r U') / (2 omega0)`` solves the correction equation exactly."""
    psi = solve_psi_profile(U3, 3.0, 1.0)
    u, du = U3.profile.values, U3.profile.derivative
    exact = -(u + U3.grid.r * du) / 6.0
    assert np.abs(psi.values - exact).max() <= 1e-5 * np.abs(exact).max()


def test_psi_zero_rhs_is_zero(U3):
    psi = solve_psi_profile(U3, 3.0, 1.0, rhs=np.zeros(U3.grid.n))
    assert not np.any(psi.values)


def test_psi_tail_rate_within_decay(U3):
    rate = solve_psi_profile(U3, 3.0, 1.0).meta["tail_rate"]
    assert 0 < rate < np.sqrt(3.0) * 1.01


def test_psi_needs_positive_omega(U3):
    with pytest.raises(ConfigError):
        solve_psi_profile(U3, 0.0, 1.0)


def test_kernel_element_is_even_with_known_origin_value(unit_ground_states):
    U = unit_ground_states[2]
    g = SymmetricGrid.uniform(10.0, 8.0, 0.05, 2)
    s = 1.5
    K = assemble_Z(U, s, g)
    assert K.z.origin == pytest.approx(2 * U.profile.slope(s), rel=1e-12)
    # direct evaluation at mirrored points
    X1, X2 = g.mesh

    def z_at(x1):
        out = 0.0
        for c, sign in ((-s, 1.0), (s, -1.0)):
            d1 = x1 - c
            r = np.hypot(d1, X2)
            out = out + sign * np.where(r > 0, U.profile.slope(r) * d1 / np.where(r > 0, r, 1.0), 0.0)
        return out

    assert np.allclose(z_at(X1), z_at(-X1), atol=1e-14)
    assert np.allclose(z_at(X1), K.z.values, atol=1e-14)


def test_kernel_norm_separates_into_two_copies(unit_ground_states):
    U = unit_ground_states[2]
    g = SymmetricGrid.uniform(36.0, 14.0, 0.05, 2)
    K = assemble_Z(U, 12.0, g)
    one = integrate(U.profile.derivative**2, U.grid) / 2  # d1 U squared, angular mean 1/N
    assert abs(K.norm_sq / (2 * one) - 1) < 1e-4


def test_two_bumps_shift_outside_grid(unit_ground_states):
    g = SymmetricGrid.uniform(5.0, 5.0, 0.1, 2)
    with pytest.raises(ConfigError):
        two_bumps(unit_ground_states[2].profile, g, 6.0)


def test_phi_solver_manufactured_solution():
    errs = []
    for h0, growth in ((0.04, 0.04), (0.02, 0.02)):
        g = SymmetricGrid.stretched(10.0, 10.0, h0, growth, 2)
        r2 = g.radius**2
        exact = np.exp(-r2)
        rhs = (1 - (4 * r2 - 4)) * exact
        solver = PhiSolver(g.zeros(), PotentialSpec.constant(1.0), 1.0)
        errs.append(np.abs(solver.solve(rhs).values - exact).max())
    assert errs[1] < 2e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_phi_solver_zero_rhs():
    g = SymmetricGrid.uniform(4.0, 4.0, 0.2, 2)
    solver = PhiSolver(g.zeros(), PotentialSpec.constant(1.0), 1.0)
    assert not np.any(solver.solve(np.zeros(g.size)).values)


def test_psi_eps_origin_value(coarse_bundle):
    b = coarse_bundle
    expect = 4 * b.params.beta * b.phi.origin * b.upsilon.origin * b.psi_profile(b.shift)
    assert b.psi_eps.origin == pytest.approx(expect, rel=1e-10)


def test_psi_eps_vanishes_without_coupling(coarse_bundle):
    b = coarse_bundle
    f = assemble_psi_eps(b.psi_profile, b.phi.origin, b.upsilon.origin, 0.0, b.shift, b.domain.fast)
    assert not np.any(f.values)


def test_phi_is_positive_source_response(coarse_bundle):
    # the source Upsilon U_eps^2 is nonnegative and concentrated; Phi peaks near it
    b = coarse_bundle
    phi = b.phi
    assert phi.origin > 0
    k = np.unravel_index(np.argmax(np.abs(phi.values)), phi.values.shape)
    assert b.domain.slow.radius[k] <= 2 * b.rho
