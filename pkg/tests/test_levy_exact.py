import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncfbm.errors import ParameterError, SizeLimitError
from ncfbm.kernel import FBMKernel, Letter, cov_matrix
from ncfbm.levy_exact import (ZETA3, cova_sum_diag, f_H, gamma_H,
                              increment_cov, lower_bound_constant,
                              m_n_closed, m_n_lower_bound, m_n_wick_oracle)


def gamma_hiprec(H, k, digits=60):
    """Gamma_H(k) in 60-digit decimal arithmetic (no cancellation issues)."""
    getcontext().prec = digits
    a = Decimal(2) * Decimal(repr(H))

    def p(y):
        y = abs(Decimal(y))
        return y ** a if y else Decimal(0)

    def d2(y):
        return p(y + 1) + p(y - 1) - 2 * p(y)

    return float(d2(k) ** 2 - d2(k - 1) * d2(k + 1))


def test_zeta3():
    assert ZETA3 == pytest.approx(sum(1 / k ** 3 for k in range(1, 200000)),
                                  rel=1e-10)


@pytest.mark.parametrize("H", [0.05, 0.2, 0.25, 0.4, 0.75])
def test_gamma_at_zero(H):
    assert gamma_H(H, 0) == pytest.approx(2 ** (2 * H) * (4 - 2 ** (2 * H)),
                                          rel=1e-14)
    assert gamma_H(H, 0) >= 3


def test_gamma_vanishes_for_brownian():
    assert gamma_H(0.5, 3) == 0.0
    assert np.all(gamma_H(0.5, np.arange(2, 50)) == 0.0)


@pytest.mark.parametrize("H", [0.1, 0.3, 0.45])
@pytest.mark.parametrize("k", [1, 3, 7, 8, 9, 20, 100, 1000, 100000])
def test_gamma_against_high_precision(H, k):
    want = gamma_hiprec(H, k)
    assert gamma_H(H, k) == pytest.approx(want, rel=1e-9)


def test_gamma_tail_exponent():
    H = 0.3
    k = np.array([1e3, 1e4])
    g = np.abs(gamma_H(H, k))
    slope = math.log10(g[1] / g[0])
    assert slope == pytest.approx(4 * H - 6, abs=0.01)


@pytest.mark.parametrize("H", [0.05, 0.15, 0.25])
def test_gamma_f_identity_at_five(H):
    assert gamma_H(H, 5) == pytest.approx(-5 ** (4 * H) * f_H(H, 0.2),
                                          rel=1e-12)


def test_gamma_f_identity_range():
    k = np.arange(1, 101, dtype=float)
    for H in (0.05, 0.1, 0.2, 0.25):
        g = gamma_H(H, k)
        f = f_H(H, 1 / k)
        assert np.all(np.abs(g + k ** (4 * H) * f) <= 1e-10 * (1 + np.abs(g)))


def test_f_values_and_bound():
    assert f_H(0.3, 0.0) == 0.0
    v = f_H(0.25, 0.5)
    assert abs(v) <= 1 / 8
    assert v == pytest.approx(0.009967675098245438, rel=1e-12)
    assert abs(f_H(0.1, 1 / 20)) <= 2 / 1e4
    with pytest.raises(ParameterError):
        f_H(0.2, 1.5)
    with pytest.raises(ParameterError):
        f_H(0.2, -0.1)


def test_f_bound_on_even_reciprocals():
    k = np.arange(1, 10001, dtype=float)
    for H in (0.05, 0.1, 0.15, 0.2, 0.25):
        assert np.all(np.abs(f_H(H, 1 / (2 * k))) <= 2 / (2 * k) ** 4)


@pytest.mark.parametrize("H", [0.1, 0.3])
def test_m0(H):
    assert m_n_closed(H, 0).value == pytest.approx(
        gamma_H(H, 0) / 2 ** (4 * H + 3), rel=1e-14)


# values frozen from the closed form; each also agrees with the Wick oracle
FROZEN = {
    (0.1, 5): 2.4570124347692137,
    (0.1, 12): 45.14301205987734,
    (0.25, 4): 0.2262030588372834,
    (0.25, 12): 0.22604567345878954,
    (0.3, 5): 0.1015804364868794,
    (0.3, 12): 0.03848125965945362,
}


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_frozen_values(key):
    H, n = key
    assert m_n_closed(H, n).value == pytest.approx(FROZEN[key], rel=1e-12)


@pytest.mark.parametrize("H", [0.1, 0.2, 0.25, 0.3, 0.4])
def test_oracle_equivalence(H):
    for n in range(0, 9):
        a = m_n_closed(H, n).value
        b = m_n_wick_oracle(H, n).value
        assert b == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("H", [0.15, 0.35])
def test_literal_and_stationary_routes_agree(H):
    for n in range(0, 7):
        a = m_n_wick_oracle(H, n, method="literal").value
        b = m_n_wick_oracle(H, n, method="stationary").value
        assert a == pytest.approx(b, rel=1e-12)


def test_oracle_caps():
    with pytest.raises(SizeLimitError):
        m_n_wick_oracle(0.3, 7, method="literal")
    with pytest.raises(SizeLimitError):
        m_n_wick_oracle(0.3, 15)
    with pytest.raises(SizeLimitError):
        m_n_closed(0.3, 41)
    with pytest.raises(ParameterError):
        m_n_wick_oracle(0.3, 2, method="bogus")


def test_delta_symmetry():
    # Delta(i,j) = Delta(j,i) on the raw covariance table
    H, n = 0.3, 4
    N = 1 << n
    h = 2.0 ** -(n + 1)
    C = cov_matrix(FBMKernel(H), [Letter.increment(i * h, (i + 1) * h)
                                  for i in range(2 * N)])
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    D = C[2 * i, 2 * j] * C[2 * i + 1, 2 * j + 1] \
        - C[2 * i, 2 * j + 1] * C[2 * j, 2 * i + 1]
    assert np.array_equal(D, D.T)


def test_growth_ratio_at_low_hurst():
    H = 0.2
    r = m_n_closed(H, 11).value / m_n_closed(H, 10).value
    assert r == pytest.approx(2 ** (1 - 4 * H), rel=0.02)


@pytest.mark.parametrize("H", [0.1, 0.2, 0.25])
def test_lower_bound(H):
    assert lower_bound_constant(H) > 0
    for n in range(0, 13):
        assert m_n_closed(H, n).value >= m_n_lower_bound(H, n)


def test_quarter_is_bounded():
    vals = [m_n_closed(0.25, n).value for n in range(13)]
    assert 0.226 < min(vals) and max(vals) < 0.2286


@pytest.mark.parametrize("H", [0.3, 0.35, 0.4])
def test_summable_root_series(H):
    roots = np.sqrt([m_n_closed(H, n).value for n in range(10, 25)])
    ratios = roots[1:] / roots[:-1]
    assert np.all(ratios < 1)
    assert ratios[-1] == pytest.approx(2 ** ((1 - 4 * H) / 2), rel=1e-3)


def test_closed_form_is_smooth_across_tail_switch():
    # terms beyond 2^20 use an asymptotic tail; the ratio must not jump
    H = 0.3
    v = [m_n_closed(H, n).value for n in range(18, 24)]
    r = np.array(v[1:]) / np.array(v[:-1])
    assert np.all(np.abs(r - 2 ** (1 - 4 * H)) < 1e-4)


def test_increment_cov_matches_kernel():
    K = FBMKernel(0.35)
    a, b = Letter.increment(0.1, 0.4), Letter.increment(0.3, 0.9)
    assert increment_cov(0.35, 0.1, 0.4, 0.3, 0.9) == pytest.approx(
        K.bilinear(a.coefs, a.times, b.coefs, b.times), rel=1e-13)


def test_cova_single_term():
    H, n, k = 0.4, 5, 3
    d = cova_sum_diag(H, n, k, k + 1, 0.1)
    h = 2.0 ** -(n + 1)
    assert d.sums["even_odd"] == pytest.approx(
        (h ** (2 * H) * (2 ** (2 * H - 1) - 1)) ** 2, rel=1e-12)


def test_cova_ratio_nonincreasing():
    ratios = [cova_sum_diag(0.4, n, 0, 1 << n, 0.1).ratio
              for n in range(4, 11)]
    assert all(np.isfinite(ratios))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(ratios, ratios[1:]))


def test_cova_increment_window():
    d = cova_sum_diag(0.3, 6, 32, 64, 0.0, u=0.0, v=0.25)
    assert set(d.sums) == {"inc_even", "inc_odd"}
    assert 0 < d.ratio < 1


def test_cova_ranges():
    with pytest.raises(ParameterError):
        cova_sum_diag(0.2, 4, 0, 16, 0.1)       # needs H > 1/4
    with pytest.raises(ParameterError):
        cova_sum_diag(0.4, 4, 3, 3, 0.1)
    with pytest.raises(ParameterError):
        cova_sum_diag(0.4, 4, 8, 16, 0.5, u=0.0, v=0.25)
    with pytest.raises(ParameterError):
        cova_sum_diag(0.4, 4, 8, 16, 0.1, u=0.0, v=0.75)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.45), st.integers(0, 6))
def test_oracle_equivalence_property(H, n):
    a = m_n_closed(H, n).value
    b = m_n_wick_oracle(H, n, method="stationary").value
    assert b == pytest.approx(a, rel=1e-10)
