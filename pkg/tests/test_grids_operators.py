import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from spikelab.errors import ConfigError, SingularFactorizationError
from spikelab.grids import RadialGrid, SymmetricGrid, sphere_area
from spikelab.operators import (LinearSystem, build_laplacian_radial, build_laplacian_symmetric,
                                factorize, integrate, interpolation_matrix_1d, radial_derivative,
                                solve_linear, transfer_matrix)


def gaussian_lap(r, N):
    return (4 * r**2 - 2 * N) * np.exp(-(r**2))


def test_radial_grid_rejects_bad_dimension():
    with pytest.raises(ConfigError):
        RadialGrid(10.0, 0.1, 4)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_laplacian_of_r_squared_and_constant(N):
    g = RadialGrid(10.0, 0.05, N)
    L = build_laplacian_radial(g)
    # interior only: the Dirichlet row sees the truncation
    inner = g.r < 8
    assert np.allclose((L @ g.r**2)[inner], 2 * N, atol=1e-9)
    assert np.allclose((L @ np.ones(g.n))[: g.n - 1], 0.0, atol=1e-9)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("order,expected", [(2, 4.0), (4, 16.0)])
def test_radial_laplacian_convergence(N, order, expected):
    errs = []
    for h in (0.04, 0.02):
        g = RadialGrid(8.0, h, N)
        f = np.exp(-(g.r**2))
        errs.append(np.abs(build_laplacian_radial(g, order) @ f - gaussian_lap(g.r, N)).max())
    ratio = errs[0] / errs[1]
    assert expected * 0.85 < ratio < expected * 1.15


def test_radial_derivative_of_gaussian():
    g = RadialGrid(8.0, 0.01, 2)
    f = np.exp(-(g.r**2))
    assert np.abs(radial_derivative(g, f) + 2 * g.r * f).max() < 1e-6


def test_integrals_match_closed_forms():
    g3 = RadialGrid(8.0, 0.01, 3)
    assert abs(integrate(np.exp(-(g3.r**2)), g3) - np.pi**1.5) < 1e-6
    g1 = RadialGrid(20.0, 0.01, 1)
    assert abs(integrate(2 / np.cosh(g1.r) ** 2, g1) - 4.0) < 1e-8
    assert integrate(np.zeros(g1.n), g1) == 0.0


@pytest.mark.parametrize("N", [2, 3])
def test_symmetric_laplacian_second_order(N):
    errs = []
    for h in (0.1, 0.05):
        g = SymmetricGrid.uniform(6.0, 6.0, h, N)
        X1, X2 = g.mesh
        r2 = X1**2 + X2**2
        f = np.exp(-r2)
        exact = (4 * r2 - 2 * N) * f
        errs.append(np.abs(build_laplacian_symmetric(g) @ f.ravel() - exact.ravel()).max())
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_symmetric_laplacian_x1_squared_is_two():
    g = SymmetricGrid.uniform(5.0, 5.0, 0.1, 2)
    X1, _ = g.mesh
    out = (build_laplacian_symmetric(g) @ (X1**2).ravel()).reshape(g.shape)
    assert np.allclose(out[:-2, :-2], 2.0, atol=1e-9)


def test_even_cosine_uses_reflected_neighbor():
    g = SymmetricGrid.uniform(np.pi * 10, 3.0, 0.05, 2)
    X1, _ = g.mesh
    out = (build_laplacian_symmetric(g) @ np.cos(X1).ravel()).reshape(g.shape)
    assert abs(out[0, 0] + 1.0) < 1e-3


def test_stretched_grid_quadrature_converges():
    errs = []
    for h0, growth in ((0.02, 0.04), (0.01, 0.02)):
        g = SymmetricGrid.stretched(8.0, 8.0, h0, growth, 2)
        errs.append(abs(integrate(np.exp(-(g.radius**2)), g) - np.pi))
    assert errs[1] < 1e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_quadrature_matches_full_grid():
    g = SymmetricGrid.uniform(4.0, 3.0, 0.25, 2)
    f = g.field(np.exp(-(g.radius**2)) * (1 + g.mesh[0] ** 2))
    x1, x2, full = f.unfold()
    w1 = np.full(x1.size, 0.25)
    w2 = np.full(x2.size, 0.25)
    # full-domain trapezoid; boundary nodes carry zero
    assert abs(w1 @ full @ w2 - f.integrate()) < 1e-12


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), t=st.floats(0, 1.8))
def test_interpolation_exact_for_even_quadratics(a, b, t):
    x = np.linspace(0.0, 2.0, 21)
    vals = a + b * x[:-1] ** 2
    M = interpolation_matrix_1d(x, np.array([t, -t]))
    out = M @ vals
    assert np.allclose(out, a + b * t**2, atol=1e-10)


def test_interpolation_zero_beyond_dirichlet():
    x = np.linspace(0.0, 1.0, 11)
    M = interpolation_matrix_1d(x, np.array([1.0, 1.5]))
    assert M.nnz == 0


def test_transfer_matrix_accuracy():
    src = SymmetricGrid.uniform(6.0, 6.0, 0.05, 2)
    f = np.exp(-(src.radius**2)).ravel()
    t1 = np.linspace(0, 3, 17)
    t2 = np.linspace(0, 2, 9)
    out = transfer_matrix(src, t1, t2) @ f
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    assert np.abs(out - np.exp(-(T1**2 + T2**2)).ravel()).max() < 1e-5


def test_solve_linear_identity_and_zero():
    b = np.arange(1.0, 6.0)
    assert np.allclose(solve_linear(LinearSystem(sp.identity(5, format="csr"), b)), b)
    assert not np.any(solve_linear(LinearSystem(sp.identity(5, format="csr"), np.zeros(5))))


def test_solve_linear_sine_mode():
    g = RadialGrid(np.pi * 4, 0.01, 1)
    L = 4 * np.pi
    A = -build_laplacian_radial(g) + sp.identity(g.n)
    mode = np.cos(np.pi * g.r / (2 * L))  # even, zero at R
    rhs = (1 + (np.pi / (2 * L)) ** 2) * mode
    assert np.abs(solve_linear(LinearSystem(A, rhs)) - mode).max() < 1e-5


def test_exactly_singular_matrix_is_refused():
    with pytest.raises(SingularFactorizationError):
        factorize(sp.csc_matrix(np.diag([1.0, 2.0, 0.0, 3.0])))


def test_tiny_pivot_is_reported():
    with pytest.raises(SingularFactorizationError, match="pivot 2"):
        factorize(sp.csc_matrix(np.diag([1.0, 2.0, 1e-17, 3.0])))


def test_linear_system_shape_check():
    with pytest.raises(ValueError):
        LinearSystem(sp.identity(3), np.ones(4))


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * np.pi)
