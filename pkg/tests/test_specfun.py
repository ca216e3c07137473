import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dplds import PrivacyBudget, ValidationError
from dplds.specfun import (c_gamma, chi2_cdf, chi2_quantile, chi_radius, q_function,
                           q_inverse, r_threshold)

# Frozen with mpmath at 30 digits (see the oracle helpers below).
Q_INV_0_1 = 1.28155156554460
CHI2_Q_HALF_K1 = 0.45493642311957
CHI2_Q_HALF_K101 = 100.334121299017
R_100_01 = 0.0774081758573
R_2_005 = 1.05859000956
C_HALF_101 = 14.1657418654
C_HALF_1 = 0.95387255241


def mp_q(c):
    with mpmath.workdps(30):
        return float(mpmath.erfc(mpmath.mpf(c) / mpmath.sqrt(2)) / 2)


def mp_chi2_cdf(x, k):
    with mpmath.workdps(30):
        return float(mpmath.gammainc(mpmath.mpf(k) / 2, 0, mpmath.mpf(x) / 2, regularized=True))


def test_q_function_known_values():
    assert q_function(0.0) == 0.5
    assert q_function(1.6448536269514722) == pytest.approx(0.05, rel=1e-12)
    assert q_function(-1.0) == pytest.approx(1 - q_function(1.0), rel=1e-14)


@pytest.mark.parametrize("c", [-3.0, -0.4, 0.0, 0.7, 2.5, 6.0, 12.0])
def test_q_function_matches_mpmath(c):
    assert q_function(c) == pytest.approx(mp_q(c), rel=1e-13)


def test_q_function_vectorized():
    out = q_function(np.array([0.0, 1.0]))
    assert out.shape == (2,)


def test_q_inverse_known_values():
    assert q_inverse(0.5) == pytest.approx(0.0, abs=1e-15)
    assert q_inverse(0.1) == pytest.approx(Q_INV_0_1, rel=1e-13)


def test_q_inverse_tiny_tail_keeps_accuracy():
    p = 1e-300
    assert q_function(q_inverse(p)) == pytest.approx(p, rel=1e-10)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_q_inverse_rejects_out_of_range(p):
    with pytest.raises(ValidationError):
        q_inverse(p)


@settings(max_examples=200, deadline=None)
@given(p=st.floats(1e-12, 1 - 1e-12))
def test_q_round_trip_property(p):
    assert abs(q_function(q_inverse(p)) - p) <= 1e-10


def test_r_threshold_values():
    assert r_threshold(PrivacyBudget(100, 0.1)) == pytest.approx(R_100_01, rel=1e-10)
    assert r_threshold(PrivacyBudget(2, 0.05)) == pytest.approx(R_2_005, rel=1e-10)


def test_r_threshold_solves_defining_equation():
    # R is the positive root of eps R^2 - Q^{-1}(delta) R - 1/2 = 0.
    for eps, delta in [(0.1, 0.01), (1.0, 0.2), (50.0, 1e-6)]:
        R = r_threshold(PrivacyBudget(eps, delta))
        assert eps * R * R - q_inverse(delta) * R - 0.5 == pytest.approx(0, abs=1e-12)
        assert R > 0


def test_r_threshold_decreases_with_budget():
    Rs = [r_threshold(PrivacyBudget(e, 0.1)) for e in (0.1, 1, 10, 100)]
    assert all(a > b for a, b in zip(Rs, Rs[1:]))
    Rs = [r_threshold(PrivacyBudget(1, d)) for d in (1e-6, 1e-3, 0.1, 0.4)]
    assert all(a > b for a, b in zip(Rs, Rs[1:]))


@pytest.mark.parametrize("kwargs", [
    dict(epsilon=0, delta=0.1), dict(epsilon=-1, delta=0.1), dict(epsilon=math.inf, delta=0.1),
    dict(epsilon=1, delta=0), dict(epsilon=1, delta=0.5), dict(epsilon=1, delta=0.1, gamma=1.2),
    dict(epsilon=1, delta=0.1, gamma=-0.1),
])
def test_budget_validation(kwargs):
    with pytest.raises(ValidationError):
        PrivacyBudget(**kwargs)


def test_budget_require_gamma():
    with pytest.raises(ValidationError):
        PrivacyBudget(1, 0.1).require_gamma()
    assert PrivacyBudget(1, 0.1, 0.3).require_gamma() == 0.3


@pytest.mark.parametrize("x,k", [(0.5, 1), (3.0, 4), (100.334, 101), (250.0, 201), (1e-3, 7)])
def test_chi2_cdf_matches_mpmath(x, k):
    assert chi2_cdf(x, k) == pytest.approx(mp_chi2_cdf(x, k), rel=1e-12)


def test_chi2_cdf_frozen_value():
    assert chi2_cdf(100.334, 101) == pytest.approx(0.49999658, abs=1e-8)


def test_chi2_cdf_rejects_bad_args():
    with pytest.raises(ValidationError):
        chi2_cdf(-1.0, 3)
    with pytest.raises(ValidationError):
        chi2_cdf(1.0, 0)
    with pytest.raises(ValidationError):
        chi2_cdf(1.0, 2.5)


def test_chi2_quantile_frozen_values():
    assert chi2_quantile(0.5, 1) == pytest.approx(CHI2_Q_HALF_K1, rel=1e-12)
    assert chi2_quantile(0.5, 101) == pytest.approx(CHI2_Q_HALF_K101, rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(g=st.floats(1e-6, 1 - 1e-6), k=st.integers(1, 400))
def test_chi2_round_trip_property(g, k):
    assert abs(chi2_cdf(chi2_quantile(g, k), k) - g) <= 1e-9


def test_chi2_quantile_rejects_endpoints():
    for g in (0.0, 1.0):
        with pytest.raises(ValidationError):
            chi2_quantile(g, 3)


def test_c_gamma_frozen_values():
    assert c_gamma(0.5, 100) == pytest.approx(C_HALF_101, rel=1e-10)
    assert c_gamma(0.5, 0) == pytest.approx(C_HALF_1, rel=1e-10)
    # m scales the degrees of freedom.
    assert c_gamma(0.5, 50, m=2) == pytest.approx(c_gamma(0.5, 101), rel=1e-14)


def test_c_gamma_conventions():
    assert c_gamma(0.0, 10) == 0.0
    assert c_gamma(1.0, 10) == math.inf
    assert chi_radius(0.0, 3) == 0.0


def test_c_gamma_monotone():
    cs = [c_gamma(0.5, T) for T in range(0, 201)]
    assert all(b > a for a, b in zip(cs, cs[1:]))
    gs = [c_gamma(g, 20) for g in np.linspace(0.05, 0.95, 19)]
    assert all(b > a for a, b in zip(gs, gs[1:]))


def test_c_gamma_rejects_bad_args():
    with pytest.raises(ValidationError):
        c_gamma(0.5, -1)
    with pytest.raises(ValidationError):
        c_gamma(0.5, 3, m=0)
    with pytest.raises(ValidationError):
        c_gamma(1.5, 3)
