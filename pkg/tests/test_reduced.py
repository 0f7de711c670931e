import dataclasses

import numpy as np
import pytest

from spikelab.errors import ConfigError, RegimeError
from spikelab.grids import SymmetricGrid
from spikelab.groundstate import rescale_ground_state
from spikelab.reduced import (LEADING_TERMS, ReducedConstants, c0_of_d, compute_b, compute_c, count_peaks,
                              extract_peak, find_root_d, fit_c, full_solve, leading_errors,
                              model_reduced_root, model_residual)


def test_b_in_one_dimension(unit_ground_states):
    # -int x U U' dx = (1/2) int U^2 dx = 2 for sqrt(2) sech
    assert compute_b(unit_ground_states[1]) == pytest.approx(2.0, abs=1e-4)


@pytest.mark.parametrize("N", [2, 3])
def test_b_scaling(unit_ground_states, N):
    base = compute_b(unit_ground_states[N])
    scaled = compute_b(rescale_ground_state(unit_ground_states[N], 4.0, 2.0))
    assert scaled == pytest.approx(4.0 ** (1 - N / 2) / 2.0 * base, rel=1e-5)


def test_c_in_one_dimension(unit_ground_states):
    # tail 2 sqrt(2) e^{-r} against int e^{-x} U^3 dx = 4 sqrt(2)
    f = fit_c(unit_ground_states[1])
    assert f.drift <= 0.03
    assert abs(f.rate - 1.0) <= 0.02
    assert f.prefactor == pytest.approx(16.0, rel=1e-3)


def test_c_positive_in_two_dimensions(unit_ground_states):
    assert compute_c(unit_ground_states[2]) > 0


def test_c_refuses_drifting_prefactor(unit_ground_states):
    with pytest.raises(RegimeError):
        compute_c(unit_ground_states[2], max_drift=1e-9)


def test_constants_validation():
    with pytest.raises(ConfigError):
        ReducedConstants(-1.0, 1.0, -1.0, 1.0, 1.0, 2)
    with pytest.raises(ConfigError):
        ReducedConstants(1.0, 1.0, 1.0, 1.0, 1.0, 2)
    with pytest.raises(ConfigError):
        ReducedConstants(1.0, 1.0, -1.0, 1.0, 0.0, 2)


def test_model_residual_increases():
    k = ReducedConstants.toy(2)
    eps = 1e-3
    rho = np.linspace(1e-4, 0.05, 400)
    assert np.all(np.diff(model_residual(rho, eps, k)) > 0)


def test_model_root_solves_balance():
    k = ReducedConstants.toy(3)
    for eps in (1e-2, 1e-4):
        r = model_reduced_root(eps, k)
        scale = k.b * eps * r
        assert abs(model_residual(r, eps, k)) <= 1e-10 * scale


def test_doubling_c_moves_root_by_half_log_two():
    k = ReducedConstants.toy(2)
    ratios = []
    for eps in (1e-3, 1e-4, 1e-6):
        r1 = model_reduced_root(eps, k)
        r2 = model_reduced_root(eps, dataclasses.replace(k, c=2.0))
        ratios.append((r2 - r1) / (eps * np.log(2) / (2 * np.sqrt(k.omega0))))
    assert np.all(np.diff(ratios) > 0)
    assert abs(ratios[-1] - 1) < 0.1


def test_ladder_ratio_is_monotone():
    k = ReducedConstants.toy(2)
    eps = 10.0 ** -np.arange(2, 7)
    d = [model_reduced_root(e, k) / (e * np.log(1 / e)) for e in eps]
    assert np.all(np.diff(d) > 0) or np.all(np.diff(d) < 0)


def test_model_root_needs_bracket():
    k = ReducedConstants(1.0, 1e-30, -1.0, 1.0, 1.0, 2)
    with pytest.raises(RegimeError):
        model_reduced_root(0.1, k)
    with pytest.raises(ConfigError):
        model_reduced_root(1.5, ReducedConstants.toy())


def _bumps(c, h=0.05):
    g = SymmetricGrid.uniform(6.0, 4.0, h, 2)
    X1, X2 = g.mesh
    f = np.exp(-((X1 - c) ** 2 + X2**2)) + np.exp(-((X1 + c) ** 2 + X2**2))
    return g.field(f)


@pytest.mark.parametrize("c", [1.23, 2.0, 2.517])
def test_extract_peak_and_count(c):
    from scipy.optimize import minimize_scalar

    v = _bumps(c)
    # overlapping bumps pull the maximum of the sum inward
    true = minimize_scalar(lambda x: -(np.exp(-((x - c) ** 2)) + np.exp(-((x + c) ** 2))),
                           bounds=(0.5 * c, c + 0.5), method="bounded", options={"xatol": 1e-10}).x
    assert extract_peak(v) == pytest.approx(true, abs=2e-3)
    assert count_peaks(v) == 2


def test_single_bump_at_origin():
    v = _bumps(0.0)
    assert extract_peak(v) == 0.0
    assert count_peaks(v) == 1


def test_leading_errors_keep_two_terms(coarse_errors):
    L = leading_errors(coarse_errors)
    assert set(L.terms2) == set(LEADING_TERMS)
    assert not np.any(L.E1.values)
    assert np.allclose(L.E2.values, sum(coarse_errors.terms2[k].values for k in LEADING_TERMS))


@pytest.fixture(scope="module")
def coarse_root(coarse_pipeline):
    return find_root_d(coarse_pipeline, 0.1)


def test_multiplier_changes_sign(coarse_pipeline):
    s = 1 / np.sqrt(coarse_pipeline.omega0)
    assert c0_of_d(coarse_pipeline, 0.1, 0.8 * s).t > 0
    assert c0_of_d(coarse_pipeline, 0.1, 1.5 * s).t < 0


def test_root_zeroes_multiplier(coarse_root):
    # the bracket tolerance on d bounds t through its slope
    assert abs(coarse_root.t) < 1e-2
    assert abs(coarse_root.projection - coarse_root.t) <= 1e-10 * max(abs(coarse_root.t), 1e-3)


def test_full_solve_from_root(coarse_pipeline, coarse_root):
    sol = full_solve(coarse_pipeline, 0.1, root=coarse_root)
    assert sol.residual <= 1e-9
    assert sol.positive
    assert sol.n_peaks == 2
    assert sol.peaks == (-sol.rho_hat, sol.rho_hat)
    assert sol.u_gap < 0.1
