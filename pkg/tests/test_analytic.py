"""Closed-form layer against independently derived reference values.

Frozen literals come from a 50-digit mpmath evaluation of the sine-basis
spectral series for the absorbed density on (-1, 1), written separately from
this package and cross-checked against the image-charge reflection series.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from occulab import (
    LAMBDA0,
    ConfigError,
    DomainError,
    SeriesTolerance,
    TruncationError,
    absorbed_density,
    eigen_lambda,
    eigen_phi,
    exit_prob_zero,
    exit_time_density,
    qsd_cdf,
    qsd_density,
    qsd_sample,
    taboo_drift,
    taboo_transition_density,
)

SURVIVAL_TABLE = [
    (0.0, 2.0, 0.10797704444410901),
    (0.5, 1.0, 0.26218827557494281),
    (-0.9, 0.5, 0.10823284000209623),
    (0.0, 0.25, 0.90899947615363375),
    (0.2, 3.0, 0.029905317695240558),
    (0.9, 0.05, 0.34527915398142295),
]


@pytest.mark.parametrize("y, T, expected", SURVIVAL_TABLE)
def test_exit_prob_zero_reference(y, T, expected):
    assert exit_prob_zero(y, T) == pytest.approx(expected, abs=1e-10)


def test_exit_prob_zero_vectorized():
    out = exit_prob_zero(np.array([0.0, 0.5, -0.5]), 1.0)
    assert out.shape == (3,)
    assert out[0] == pytest.approx(exit_prob_zero(0.0, 1.0), rel=1e-14)
    assert out[1] == out[2] == pytest.approx(0.26218827557494281, abs=1e-10)


def test_exit_prob_zero_boundary_and_symmetry():
    assert exit_prob_zero(1.0, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert exit_prob_zero(-1.0, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert exit_prob_zero(0.65, 1.3) == pytest.approx(
        exit_prob_zero(-0.65, 1.3), rel=1e-13
    )


@given(
    y=st.floats(-0.95, 0.95),
    T=st.floats(0.05, 4.0),
    dT=st.floats(0.05, 1.0),
)
def test_exit_prob_zero_decreasing_in_time(y, T, dT):
    assert exit_prob_zero(y, T + dT) < exit_prob_zero(y, T) + 1e-12


def test_exit_prob_zero_long_time_profile():
    # e^{lambda_0 T} P_y -> phi_0(y); the next mode is e^{-lambda_0 T} smaller
    y = 0.3
    scaled = math.exp(LAMBDA0 * 6.0) * exit_prob_zero(y, 6.0)
    assert scaled == pytest.approx(eigen_phi(0, y), rel=1e-3)


DENSITY_TABLE = [
    (0.0, 1.0, 0.45736522563391993),
    (0.5, 0.3, 0.88574626385729538),
]


@pytest.mark.parametrize("y, t, expected", DENSITY_TABLE)
def test_exit_time_density_reference(y, t, expected):
    assert exit_time_density(y, t) == pytest.approx(expected, rel=1e-9)


def test_exit_time_density_is_minus_survival_derivative():
    y, t, h = 0.25, 1.2, 1e-5
    fd = (exit_prob_zero(y, t - h) - exit_prob_zero(y, t + h)) / (2.0 * h)
    assert exit_time_density(y, t) == pytest.approx(fd, rel=1e-7)


ABSORBED_TABLE = [
    (0.3, -0.2, 0.7, 0.34230894223650345),
    (0.0, 0.0, 1.0, 0.29122799567483075),
    (0.3, -0.2, 0.08, 0.29565140283342351),
]


@pytest.mark.parametrize("x1, x2, t, expected", ABSORBED_TABLE)
def test_absorbed_density_reference(x1, x2, t, expected):
    assert absorbed_density(x1, x2, t) == pytest.approx(expected, rel=1e-10)


@given(
    x1=st.floats(-0.9, 0.9),
    x2=st.floats(-0.9, 0.9),
    t=st.floats(0.05, 3.0),
)
def test_absorbed_density_symmetric_and_nonnegative(x1, x2, t):
    a = absorbed_density(x1, x2, t)
    assert a >= 0.0
    assert a == pytest.approx(absorbed_density(x2, x1, t), rel=1e-11, abs=1e-13)


def test_absorbed_density_integrates_to_survival():
    y, t = 0.4, 0.9
    total, _ = quad(lambda x: absorbed_density(y, x, t), -1.0, 1.0, limit=200)
    assert total == pytest.approx(exit_prob_zero(y, t), rel=1e-9)


def test_absorbed_density_semigroup():
    y, x, t1, t2 = 0.2, -0.5, 0.4, 0.3
    conv, _ = quad(
        lambda z: absorbed_density(y, z, t1) * absorbed_density(z, x, t2),
        -1.0, 1.0, limit=200,
    )
    assert conv == pytest.approx(absorbed_density(y, x, t1 + t2), rel=1e-9)


def test_qsd_start_decays_at_ground_rate():
    # integrating the absorbed kernel against the stationary start profile
    # reproduces the profile times e^{-lambda_0 t}
    x, t = 0.3, 0.7
    lhs, _ = quad(
        lambda ySt: qsd_density(ySt) * absorbed_density(ySt, x, t), -1.0, 1.0,
        limit=200,
    )
    assert lhs == pytest.approx(math.exp(-LAMBDA0 * t) * qsd_density(x), rel=1e-9)


def test_taboo_density_reference_and_normalization():
    assert taboo_transition_density(0.1, 0.4, 0.8) == pytest.approx(
        0.6668878971468427, rel=1e-10
    )
    total, _ = quad(lambda x: taboo_transition_density(0.1, x, 0.8), -1.0, 1.0,
                    limit=200)
    assert total == pytest.approx(1.0, rel=1e-9)


def test_taboo_density_long_time_limit():
    # the conditioned process forgets its start; the limit profile is the
    # squared ground-mode shape cos^2(pi x / 2)
    limit = math.cos(math.pi * 0.4 / 2.0) ** 2
    for x1 in (0.3, -0.6):
        assert taboo_transition_density(x1, 0.4, 8.0) == pytest.approx(
            limit, abs=1e-9
        )


def test_taboo_density_vectorized_in_x2():
    xs = np.linspace(-0.9, 0.9, 7)
    vec = taboo_transition_density(0.1, xs, 0.8)
    assert vec.shape == xs.shape
    for xi, vi in zip(xs, vec):
        assert vi == pytest.approx(taboo_transition_density(0.1, float(xi), 0.8),
                                   rel=1e-13)


def test_qsd_closed_forms():
    y = 0.37
    assert qsd_density(y) == pytest.approx(math.pi / 4.0 * math.cos(math.pi * y / 2.0),
                                           rel=1e-15)
    assert qsd_cdf(y) == pytest.approx((1.0 + math.sin(math.pi * y / 2.0)) / 2.0,
                                       rel=1e-15)
    assert qsd_cdf(-1.0) == 0.0
    assert qsd_cdf(1.0) == 1.0
    total, _ = quad(qsd_density, -1.0, 1.0)
    assert total == pytest.approx(1.0, rel=1e-12)


@given(u=st.floats(1e-9, 1.0 - 1e-9))
def test_qsd_sample_inverts_cdf(u):
    y = qsd_sample(u)
    assert -1.0 <= y <= 1.0
    assert qsd_cdf(y) == pytest.approx(u, abs=1e-12)


def test_taboo_drift_formula():
    y = 0.41
    assert taboo_drift(y) == pytest.approx(
        -math.pi / 2.0 * math.tan(math.pi * y / 2.0), rel=1e-14
    )
    assert taboo_drift(0.0) == 0.0
    assert taboo_drift(0.8) < 0.0 < taboo_drift(-0.8)


def test_eigen_values_and_modes():
    assert eigen_lambda(0) == pytest.approx(LAMBDA0, rel=1e-15)
    assert eigen_lambda(1) == pytest.approx(9.0 * LAMBDA0, rel=1e-15)
    ns = np.arange(4)
    assert np.allclose(eigen_lambda(ns), (2 * ns + 1) ** 2 * LAMBDA0)
    assert eigen_phi(0, 0.0) == pytest.approx(4.0 / math.pi, rel=1e-15)
    assert eigen_phi(0, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_domain_and_tolerance_errors():
    with pytest.raises(DomainError):
        exit_prob_zero(1.2, 1.0)
    with pytest.raises(DomainError):
        eigen_lambda(-1)
    with pytest.raises(ConfigError):
        SeriesTolerance(abs_tol=-1e-9)
    with pytest.raises(ConfigError):
        SeriesTolerance(max_terms=0)
    with pytest.raises(TruncationError):
        exit_prob_zero(0.0, 0.12, SeriesTolerance(abs_tol=1e-12, max_terms=1))
