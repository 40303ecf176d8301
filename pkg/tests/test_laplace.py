"""Occupation-transform layer: frozen references, exact identities, oracles.

Frozen literals come from a 50-digit mpmath evaluation of the closed form
u/lambda (1 - e^{w s} erfc(v sqrt(s/2))), coded separately from this package.
"""

import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from occulab import (
    LAMBDA0,
    DomainError,
    PoleError,
    TransformValue,
    exit_prob_zero,
    expansion_residual_v,
    expansion_residual_w,
    fn_S_hat,
    fn_u,
    fn_v,
    fn_w,
    ingham_equivalent,
    laplace_R,
    laplace_R_mp,
    laplace_R_raw,
    survival_transform_mp,
)

TRANSFORM_TABLE = [
    (0.3, 0.0, 0.5, 0.85650814794040041 + 0.0j),
    (0.05, 0.9, 2.0, 3.6876734371217559 + 0.0j),
    (1.0 + 2.0j, 0.0, 1.0, -0.087279806311968429 - 0.14020813254019964j),
]


@pytest.mark.parametrize("lam, y, s, expected", TRANSFORM_TABLE)
def test_laplace_R_reference(lam, y, s, expected):
    got = laplace_R(lam, y, s).value
    assert abs(got - expected) <= 1e-12 * abs(expected)


@pytest.mark.parametrize("lam, y, s, expected", TRANSFORM_TABLE)
def test_laplace_R_mp_matches_float_version(lam, y, s, expected):
    got = complex(laplace_R_mp(lam, y, s))
    assert abs(got - expected) <= 1e-12 * abs(expected)


def test_laplace_R_raw_quadrature_oracle():
    lam, y, s = 1.0, 0.5, 0.5
    closed = laplace_R(lam, y, s).value
    raw = laplace_R_raw(lam, y, s)
    assert abs(closed - raw) <= 1e-9 * abs(raw)


@given(lam=st.floats(1e-3, 50.0))
def test_w_is_v_squared_half_minus_lambda(lam):
    v = fn_v(lam)
    assert fn_w(lam) == pytest.approx(v * v / 2.0 - lam, rel=1e-12, abs=1e-15)


@given(lam=st.floats(1e-6, 100.0), y=st.floats(-1.0, 1.0))
def test_u_bounds(lam, y):
    u = fn_u(lam, y)
    assert 0.0 < u <= 1.0 + 1e-15
    assert fn_u(lam, 1.0) == pytest.approx(1.0, rel=1e-14)


@given(lam=st.floats(1e-6, 100.0))
def test_v_bounds(lam):
    v = fn_v(lam)
    assert 0.0 < v < math.sqrt(2.0 * lam) + 1e-15
    assert fn_w(lam) < 0.0


def test_small_lambda_leading_orders():
    # v = 2 lambda + O(lambda^2), w = -lambda + 2 lambda^2 + O(lambda^3)
    lam = 1e-6
    assert fn_v(lam) / (2.0 * lam) == pytest.approx(1.0, abs=1e-5)
    assert (fn_w(lam) + lam) / (lam * lam) == pytest.approx(2.0, abs=1e-5)


def test_expansion_residuals_shrink_quadratically_and_linearly():
    # one clean decade; below ~1e-3 the pole subtraction hits the double-
    # precision cancellation floor
    rv1, rv2 = expansion_residual_v(1e-1), expansion_residual_v(1e-2)
    rw1, rw2 = expansion_residual_w(1e-1), expansion_residual_w(1e-2)
    assert abs(rv1) / abs(rv2) == pytest.approx(100.0, rel=0.2)
    assert abs(rw1) / abs(rw2) == pytest.approx(10.0, rel=0.2)


@pytest.mark.parametrize("lam", [0.3, 2.0, 10.0])
def test_stationary_average_of_u_is_resolvent_weight(lam):
    # integrating u against the cosine start profile gives exactly
    # lambda_0 / (lambda_0 + lambda); this fixes the transform normalization
    avg, _ = quad(
        lambda y: math.pi / 4.0 * math.cos(math.pi * y / 2.0) * fn_u(lam, y),
        -1.0, 1.0, limit=200,
    )
    assert avg == pytest.approx(LAMBDA0 / (LAMBDA0 + lam), rel=1e-11)


def test_survival_transform_against_quadrature():
    lam, y = 1.0, 0.0
    direct, _ = quad(
        lambda T: math.exp(-lam * T) * exit_prob_zero(y, T), 0.0, 40.0, limit=400,
    )
    assert float(survival_transform_mp(lam, y)) == pytest.approx(direct, rel=1e-8)


@pytest.mark.parametrize(
    "lam, y, s", [(0.5, 0.0, 1.0), (2.0, 0.6, 0.5), (0.3 + 0.4j, -0.2, 1.5)]
)
def test_S_hat_is_lambda_times_shifted_transform(lam, y, s):
    ratio = fn_S_hat(lam, y, s).ratio(laplace_R(lam - LAMBDA0, y, s))
    assert abs(ratio - lam) <= 1e-12 * abs(lam)


def test_ingham_equivalent_ratio_near_zero():
    ratio = fn_S_hat(0.01, 0.0, 1.0).ratio(ingham_equivalent(0.01, 0.0, 1.0))
    assert ratio.real == pytest.approx(1.0053310221245735, rel=1e-9)
    assert abs(ratio.imag) < 1e-12


def test_transform_value_roundtrip_and_arithmetic():
    a = TransformValue.from_complex(3.0 - 4.0j)
    assert a.log_modulus == pytest.approx(math.log(5.0), rel=1e-15)
    assert abs(a.value - (3.0 - 4.0j)) < 1e-14
    b = TransformValue.from_complex(0.5j)
    prod = (a * b).value
    assert abs(prod - (3.0 - 4.0j) * 0.5j) < 1e-13
    quot = (a / b).value
    assert abs(quot - (3.0 - 4.0j) / 0.5j) < 1e-13
    assert abs(a.ratio(a) - 1.0) < 1e-15
    huge = TransformValue(1000.0, 0.3)
    assert not huge.is_plain
    assert (huge / huge).is_plain


@given(z=st.complex_numbers(min_magnitude=1e-5, max_magnitude=1e5,
                            allow_nan=False, allow_infinity=False))
def test_transform_value_from_complex_roundtrip(z):
    tv = TransformValue.from_complex(z)
    assert cmath.isclose(tv.value, z, rel_tol=1e-12)


def test_pole_and_domain_errors():
    with pytest.raises(PoleError):
        fn_v(-math.pi**2 / 8.0)
    with pytest.raises(DomainError):
        # the half-plane guard rejects the first pole before pole detection
        laplace_R(-math.pi**2 / 8.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        laplace_R(1.0, 1.5, 0.5)
    with pytest.raises(DomainError):
        laplace_R(1.0, 0.0, -0.1)
    with pytest.raises(DomainError):
        laplace_R_raw(-1.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        fn_S_hat(-0.3, 0.0, 0.5)


def test_transform_between_poles_is_real():
    # the branch between the first two poles keeps the transform real
    lam = -0.5
    assert -math.pi**2 / 8.0 < lam
    val = laplace_R(lam, 0.3, 0.5)
    assert abs(val.phase % math.pi) < 1e-12
