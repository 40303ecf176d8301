"""Saddle-point layer: defining equation, expansion quality, closed forms.

Frozen literals come from a 50-digit mpmath evaluation of the cubic root
and of T h + V(h), coded separately from this package.
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from occulab import (
    EPS_SADDLE,
    LAMBDA0,
    AsympValue,
    DomainError,
    asymp_prob_leq_s,
    asymp_snu,
    saddle_T0,
    saddle_V,
    saddle_Vp,
    saddle_Vpp,
    saddle_exponent,
    saddle_h,
)


@given(T=st.floats(1e-3, 1e5), s=st.floats(1e-2, 50.0))
def test_saddle_h_solves_defining_equation(T, s):
    # h(T) is the root of -V'(h) = T; the Cardano form must satisfy it
    # to rounding over many orders of magnitude in both arguments.
    h = saddle_h(T, s)
    assert 0.0 < h < math.pi**2 / 6.0
    assert abs(saddle_Vp(h, s) + T) <= 1e-10 * T


def test_saddle_h_reference():
    assert saddle_h(10.0, 1.0) == pytest.approx(0.70364206422193043, rel=1e-13)


def test_saddle_T0_closed_form():
    # -V'(pi^2/16) collapses to 160 s / pi^2.
    for s in (0.25, 1.0, 7.5):
        assert saddle_T0(s) == pytest.approx(160.0 * s / math.pi**2, rel=1e-13)
    # At the matching horizon the saddle sits exactly at the split point.
    assert saddle_h(saddle_T0(0.7), 0.7) == pytest.approx(EPS_SADDLE, rel=1e-12)


def test_saddle_exponent_reference():
    exact, three = saddle_exponent(10.0, 1.0)
    assert exact == pytest.approx(9.210903994022388, rel=1e-13)
    assert three == pytest.approx(9.2574435557731682, rel=1e-13)


def test_saddle_exponent_remainder_decays_like_T_to_minus_third():
    # exact - three_term = O(T^{-1/3}); scaled by T^{1/3} it converges to a
    # constant near -0.0925 for s = 1.
    r6 = np.subtract(*saddle_exponent(1e6, 1.0)) * 1e2
    r9 = np.subtract(*saddle_exponent(1e9, 1.0)) * 1e3
    assert -1.0 < r9 < 0.0
    assert abs(r6 - r9) < 1e-3


@given(lam=st.floats(0.05, 3.0), s=st.floats(0.1, 5.0))
def test_saddle_V_derivatives_match_finite_differences(lam, s):
    # V' and V'' have zeros inside the sampled range (at pi^2/6 and pi^2/4),
    # so an absolute floor accompanies the relative tolerance.
    d = 1e-5 * lam
    fd1 = (saddle_V(lam + d, s) - saddle_V(lam - d, s)) / (2.0 * d)
    fd2 = (saddle_V(lam + d, s) - 2.0 * saddle_V(lam, s) + saddle_V(lam - d, s)) / d**2
    assert fd1 == pytest.approx(saddle_Vp(lam, s), rel=1e-6, abs=1e-7)
    assert fd2 == pytest.approx(saddle_Vpp(lam, s), rel=1e-3, abs=1e-4)


def test_probability_and_qsd_forms_differ_by_exact_prefactor():
    # Started from y instead of the quasi-stationary law, the asymptotic
    # picks up exactly (4/pi) cos(pi y / 2) e^{-pi^2 T / 8} and nothing else.
    for y in (0.0, 0.5, -0.9):
        for s, T in ((0.5, 4.0), (2.0, 30.0)):
            lhs = asymp_prob_leq_s(y, s, T).log_value
            rhs = -LAMBDA0 * T + asymp_snu(s, T).log_value
            shift = math.log(4.0 / math.pi * math.cos(math.pi * y / 2.0))
            assert lhs - rhs == pytest.approx(shift, abs=1e-12)


def test_asymp_log_values_reference():
    assert asymp_snu(1.0, 20.0).log_value == pytest.approx(
        13.515351659758648, rel=1e-13
    )
    assert asymp_prob_leq_s(0.0, 0.5, 4.0).log_value == pytest.approx(
        -2.2093688690528372, rel=1e-13
    )


def test_asymp_value_exponentiates():
    av = asymp_prob_leq_s(0.0, 0.5, 4.0)
    assert isinstance(av, AsympValue)
    assert av.value == pytest.approx(math.exp(av.log_value), rel=1e-15)


def test_vectorized_over_T():
    T = np.array([5.0, 10.0, 20.0])
    h = saddle_h(T, 1.0)
    assert h.shape == (3,)
    assert h[1] == pytest.approx(saddle_h(10.0, 1.0), rel=1e-15)
    exact, three = saddle_exponent(T, 1.0)
    assert exact.shape == three.shape == (3,)
    av = asymp_snu(1.0, T)
    assert av.log_value.shape == (3,)
    assert av.log_value[2] == pytest.approx(asymp_snu(1.0, 20.0).log_value, rel=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        saddle_h(0.0, 1.0)
    with pytest.raises(DomainError):
        saddle_h(10.0, -1.0)
    with pytest.raises(DomainError):
        saddle_V(0.0, 1.0)
    with pytest.raises(DomainError):
        saddle_exponent(np.inf, 1.0)
    # boundary is open: |y| = 1 already fails
    with pytest.raises(DomainError):
        asymp_prob_leq_s(1.0, 0.5, 4.0)
    with pytest.raises(DomainError):
        asymp_snu(0.5, 0.0)
