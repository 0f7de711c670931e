import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikelab.errors import ConfigError, SpikelabError
from spikelab.overlap import (OverlapQuery, RegimePrediction, classify_regime, compare_log_models, fit_rate,
                              overlap_uv, theta_integral, theta_prediction, theta_window)


def gauss(r):
    return np.exp(-np.asarray(r) ** 2)


def test_sech_convolution_oracle(unit_ground_states):
    prof = unit_ground_states[1].profile
    assert overlap_uv(prof, prof, 5.0, 1) == pytest.approx(0.26953, abs=5e-6)
    assert overlap_uv(prof, prof, 5.0, 1) == pytest.approx(20 / np.sinh(5.0), rel=1e-6)


@pytest.mark.parametrize("zeta", [2.0, 5.0, 8.0])
def test_theta_one_one_is_derivative_of_convolution(unit_ground_states, zeta):
    prof = unit_ground_states[1].profile
    got = theta_integral(OverlapQuery(prof, 1, 1, zeta, 1))
    exact = -4 * (np.sinh(zeta) - zeta * np.cosh(zeta)) / np.sinh(zeta) ** 2
    assert got == pytest.approx(exact, rel=1e-5)


def test_theta_is_odd_in_shift(unit_ground_states):
    prof = unit_ground_states[2].profile
    a = theta_integral(OverlapQuery(prof, 1, 3, 3.0, 2))
    b = theta_integral(OverlapQuery(prof, 1, 3, -3.0, 2))
    assert a > 0
    assert b == pytest.approx(-a, rel=1e-10)
    assert abs(theta_integral(OverlapQuery(prof, 2, 2, 0.0, 2))) < 1e-12


def test_query_validation(unit_ground_states):
    with pytest.raises(ConfigError):
        OverlapQuery(unit_ground_states[1].profile, 0.5, 1, 1.0, 1)
    with pytest.raises(ConfigError):
        OverlapQuery(unit_ground_states[1].profile, 1, 1, 1.0, 4)
    with pytest.raises(SpikelabError):
        theta_integral(OverlapQuery(unit_ground_states[1].profile, 1, 1, 1e3, 1))


@settings(max_examples=20, deadline=None)
@given(zeta=st.floats(-3.0, 3.0), N=st.integers(1, 3))
def test_gaussian_overlap_closed_form_and_symmetry(zeta, N):
    got = overlap_uv(gauss, gauss, zeta, N, R=8.0, h=0.02)
    # the cylindrical weight rho makes the N=3 trapezoid second order at the axis
    tol = 1e-6 if N < 3 else 3e-4
    assert got == pytest.approx((np.pi / 2) ** (N / 2) * np.exp(-(zeta**2) / 2), rel=tol)
    assert overlap_uv(gauss, gauss, -zeta, N, R=8.0, h=0.02) == pytest.approx(got, rel=1e-10)


def test_three_dimensional_quadrature_is_second_order():
    exact = (np.pi / 2) ** 1.5
    e1 = abs(overlap_uv(gauss, gauss, 0.0, 3, R=8.0, h=0.04) - exact)
    e2 = abs(overlap_uv(gauss, gauss, 0.0, 3, R=8.0, h=0.02) - exact)
    assert 3.5 < e1 / e2 < 4.5


@pytest.mark.parametrize("u,v,N,expected", [
    ((0.0, 1.0), (0.0, 2.0), 2, RegimePrediction("slower-tail", 1.0, 0.0, False)),
    ((0.0, 2.0), (-1.0, 1.0), 2, RegimePrediction("slower-tail", 1.0, -1.0, False)),
    ((0.0, 1.0), (0.0, 1.0), 2, RegimePrediction("equal-rate-sum", 1.0, 1.5, False)),
    ((0.0, 1.0), (-1.5, 1.0), 2, RegimePrediction("equal-rate-log", 1.0, 0.0, True)),
    ((-3.0, 1.0), (0.0, 1.0), 2, RegimePrediction("equal-rate-dominant", 1.0, 0.0, False)),
    ((-1.0, 1.0), (-1.0, 1.0), 3, RegimePrediction("equal-rate-sum", 1.0, 0.0, False)),
])
def test_classify_regime(u, v, N, expected):
    assert classify_regime(u, v, N) == expected


def test_classify_regime_rejects_bad_rates():
    with pytest.raises(ConfigError):
        classify_regime((0.0, 0.0), (0.0, 1.0), 2)


@pytest.mark.parametrize("s,t,N,label,power,log", [
    (1, 3, 2, "s<t", -0.5, False),
    (1, 3, 3, "s<t", -1.0, False),
    (1, 1, 2, "s=t,below", 0.5, False),
    (3, 3, 2, "s=t,critical", -1.5, True),
    (2, 2, 3, "s=t,critical", -2.0, True),
    (4, 4, 2, "s=t,above", -2.0, False),
    (2, 2, 1, "s=t,below", 1.0, False),
])
def test_theta_prediction(s, t, N, label, power, log):
    p = theta_prediction(s, t, N, lam=4.0)
    assert (p.label, p.power, p.log) == (label, pytest.approx(power), log)
    assert p.rate == pytest.approx(2 * s)


def test_theta_prediction_needs_ordered_powers():
    with pytest.raises(ConfigError):
        theta_prediction(3, 1, 2)


def test_theta_prediction_agrees_with_convolution_regimes():
    """Equal powers: ``U^s`` and ``d1 U^s`` both decay like ``r^{-s(N-1)/2} e^{-s r}``."""
    for N in (2, 3):
        for s in (1, 2, 3, 4):
            a = -s * (N - 1) / 2
            reg = classify_regime((a, s), (a, s), N)
            pred = theta_prediction(s, s, N)
            assert reg.log == pred.log
            assert reg.power == pytest.approx(pred.power)


def test_log_model_detection():
    z = np.linspace(6.0, 12.0, 13)
    with_log = np.exp(-2 * z) * z**-2 * np.log(z)
    plain = np.exp(-2 * z) * z**-2
    c = compare_log_models(z, with_log, 2.0, -2.0)
    assert c.prefers_log and c.q_hat == pytest.approx(1.0, abs=1e-9)
    c = compare_log_models(z, plain, 2.0, -2.0)
    assert not c.prefers_log and abs(c.q_hat) < 1e-9


def test_fit_rate_synthetic():
    z = theta_window(4.0)
    vals = 3.0 * np.exp(-2 * z) * z**-0.5
    f = fit_rate(z, vals, RegimePrediction("s<t", 2.0, -0.5, False))
    assert f.rate == pytest.approx(2.0, rel=1e-10)
    assert f.prefactor == pytest.approx(3.0, rel=1e-10)
    assert f.drift < 1e-10
    with pytest.raises(SpikelabError):
        fit_rate(z[:2], vals[:2], RegimePrediction("s<t", 2.0, -0.5, False))


def test_theta_window_scales_with_decay_length():
    w = theta_window(4.0)
    assert w[0] == pytest.approx(3.0) and w[-1] == pytest.approx(6.0) and w.size == 13
