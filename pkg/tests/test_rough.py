import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncfbm.errors import GridError, ParameterError, RegimeError
from ncfbm.matrix_model import (Grid2Fn, MatrixEnsembleConfig, MatrixPath,
                                dyadic_times, interpolate_dyadic,
                                sample_matrix_path)
from ncfbm.ncalg import Poly, eval_poly, sharp, tensor_derivative
from ncfbm.rough import (LevyAreaEval, RateSeries, adapted_product,
                         chen_defect, commutator_identity_defect, delta1,
                         delta2, ito_defect, level_diff, pl_integral,
                         pl_levy_area, pl_levy_area_right, rate_estimate,
                         rough_integral, scale, sewing_apply,
                         sewing_constant, strato_free_integral,
                         young_integral)

from conftest import sym

ONE, X1, X2 = Poly((1.0,)), Poly((0.0, 1.0)), Poly((0.0, 0.0, 1.0))
spec_norm = lambda A: float(np.linalg.norm(A, 2))  # noqa: E731


def brute_area(path, N, s, t, U, m=4000):
    """Midpoint sum of (X_u - X_s) U dX_u on a fine mesh containing the kinks
    of X^(N); exact on each linear piece, so only round-off remains."""
    Xn = interpolate_dyadic(path, N)
    kinks = np.arange(1, 2 ** N) / 2 ** N
    u = np.union1d(np.linspace(s, t, m + 1), kinks[(kinks > s) & (kinks < t)])
    vals = np.array([Xn(x) for x in u])
    base = vals[0]
    mid = 0.5 * (vals[:-1] + vals[1:]) - base
    return np.einsum("kij,jl,klm->im", mid, U, np.diff(vals, axis=0))


def naive_corrected_sum(path, area, P, Q, level):
    """Corrected sum written term by term with explicit tensor algebra."""
    d = path.d
    h = 1.0 / 2 ** level
    total = np.zeros((d, d))
    for i in range(2 ** level):
        s, t = i * h, (i + 1) * h
        X = path.at(s)
        PX, QX = eval_poly(P, X), eval_poly(Q, X)
        total += PX @ (path.at(t) - X) @ QX
        dP = tensor_derivative(P).at(X)
        for L, R in dP.terms:
            total += L @ area(s, t, R) @ QX
        dQ = tensor_derivative(Q).at(X)
        for L, R in dQ.terms:
            total += PX @ area(s, t, L.T).T @ R
    return total


# ---------------------------------------------------------------- increments

def test_delta2_of_delta1_is_exactly_zero(path_small):
    h = delta1(path_small)
    rng = np.random.default_rng(0)
    for _ in range(50):
        s, u, t = np.sort(rng.integers(0, 257, 3)) / 256
        assert not np.any(delta2(h, s, u, t))


def test_constant_path_and_exact_two_parameter_functions(path_small):
    const = MatrixPath(dyadic_times(3), np.ones((9, 2, 2)), level=3)
    h = delta1(const)
    assert not np.any(h(0.125, 0.75))
    g = lambda t: np.sin(t) * np.eye(3)  # noqa: E731
    h2 = Grid2Fn(lambda s, t: g(t) - g(s), d=3)
    assert np.allclose(delta2(h2, 0.1, 0.4, 0.9), 0, atol=1e-15)
    with pytest.raises(ParameterError):
        delta2(h2, 0.5, 0.4, 0.9)
    with pytest.raises(GridError):
        delta1(path_small)(0.1, 0.5)


def test_adapted_product(path_small):
    w = [(0.0, 0.25), (0.25, 0.5)]
    P = adapted_product(path_small, w, 0.5)
    X = path_small
    assert np.allclose(P, X.at(0.25) @ (X.at(0.5) - X.at(0.25)))
    with pytest.raises(ParameterError):
        adapted_product(path_small, [(0.25, 0.75)], 0.5)


def test_scale_positive(path_small):
    assert scale(path_small) > 1
    assert scale(path_small, 2 * np.eye(8)) == pytest.approx(
        3 * scale(path_small))


# ---------------------------------------------------------------- Levy area

def test_area_trivial_cases(path_small):
    A = LevyAreaEval(path_small, 6)
    assert not np.any(A(0.25, 0.75, np.zeros((8, 8))))
    assert not np.any(A(0.5, 0.5, np.eye(8)))


@pytest.mark.parametrize("s, t", [(0.25, 0.75), (0.1, 0.83), (0.0, 1.0)])
def test_area_matches_fine_riemann_sum(path_small, s, t):
    U = sym(np.random.default_rng(1), 8)
    exact = pl_levy_area(path_small, 3, s, t, U)
    approx = brute_area(path_small, 3, s, t, U)
    assert spec_norm(exact - approx) <= 1e-9 * (1 + spec_norm(exact))


def test_scalar_area_is_half_square(scalar_path):
    U = np.array([[1.7]])
    for N in (0, 3, 7, 10):
        for s, t in [(0.0, 1.0), (0.25, 0.5), (0.3, 0.9)]:
            Xn = interpolate_dyadic(scalar_path, N)
            dx = (Xn(t) - Xn(s))[0, 0]
            got = pl_levy_area(scalar_path, N, s, t, U)[0, 0]
            assert got == pytest.approx(0.5 * 1.7 * dx * dx, rel=1e-12,
                                        abs=1e-15)


def test_area_linear_in_U(path_small):
    rng = np.random.default_rng(2)
    U, V = sym(rng, 8), rng.standard_normal((8, 8))
    A = LevyAreaEval(path_small, 7)
    lhs = A(0.125, 0.875, 2 * U - 3 * V)
    rhs = 2 * A(0.125, 0.875, U) - 3 * A(0.125, 0.875, V)
    assert spec_norm(lhs - rhs) <= 1e-12 * scale(path_small, U + V)


def test_area_adjoint_relation(path_small):
    rng = np.random.default_rng(3)
    U = rng.standard_normal((8, 8))
    A = LevyAreaEval(path_small, 8)
    for s, t in [(0.0, 1.0), (0.25, 0.625), (0.2, 0.7)]:
        gap = A(s, t, U).T - pl_levy_area_right(path_small, 8, s, t, U.T)
        assert spec_norm(gap) <= 1e-12 * scale(path_small, U)


def test_commutator_identity(path_small):
    sc = scale(path_small)
    for n in (0, 2, 5, 8):
        assert commutator_identity_defect(path_small, n) <= 1e-12 * sc


def test_chen(path_small):
    rng = np.random.default_rng(4)
    U = sym(rng, 8)
    sc = scale(path_small, U)
    for N in (2, 5, 8):
        A = LevyAreaEval(path_small, N)
        assert chen_defect(A, 0.25, 0.25, 0.75, U) == 0.0
        assert chen_defect(A, 0.25, 0.75, 0.75, U) == 0.0
        for _ in range(10):
            s, u, t = np.sort(rng.integers(0, 257, 3)) / 256
            assert chen_defect(A, s, u, t, U) <= 1e-10 * sc
        assert chen_defect(A, 0.11, 0.47, 0.93, U) <= 1e-10 * sc


def test_scalar_chen(scalar_path):
    A = LevyAreaEval(scalar_path, 6)
    assert chen_defect(A, 0.1, 0.45, 0.8, np.eye(1)) < 1e-14


def test_cells_agree_with_direct_areas(path_small):
    A = LevyAreaEval(path_small, 8)
    rng = np.random.default_rng(5)
    C = 8
    Us = rng.standard_normal((C, 2, 8, 8))
    out = A.cells(3, 0.0, 1.0, Us)
    for c in range(C):
        for r in range(2):
            want = A(c / 8, (c + 1) / 8, Us[c, r])
            assert np.allclose(out[c, r], want, atol=1e-12)
    with pytest.raises(ParameterError):
        LevyAreaEval(path_small, 2).cells(3, 0.0, 1.0, Us)


def test_certificate(path_small):
    A = LevyAreaEval.finest(path_small)
    assert A.N == 8
    c = A.certificate(0.0, 1.0, np.eye(8))
    assert np.isfinite(c) and c > 0
    assert math.isnan(LevyAreaEval(path_small, 0).certificate(0, 1, np.eye(8)))


def test_level_diff_two_routes(path_small):
    rng = np.random.default_rng(6)
    U = sym(rng, 8)
    sc = scale(path_small, U)
    for n, k, l in [(0, 0, 1), (3, 2, 7), (6, 0, 64), (7, 100, 128)]:
        direct, reduced = level_diff(path_small, n, k, l, U)
        assert spec_norm(direct - reduced) <= 1e-12 * sc
    with pytest.raises(GridError):
        level_diff(path_small, 8, 0, 1, U)
    with pytest.raises(GridError):
        level_diff(path_small, 3, 5, 5, U)


def test_level_diff_scalar_vanishes(scalar_path):
    direct, reduced = level_diff(scalar_path, 4, 0, 16, np.eye(1))
    assert abs(reduced[0, 0]) == 0.0
    assert abs(direct[0, 0]) < 1e-14


# ---------------------------------------------------------------- integrals

def test_trivial_integrands_telescope(path_small):
    dX = path_small.at(0.75) - path_small.at(0.25)
    A = LevyAreaEval.finest(path_small)
    for lv in (2, 5, 8):
        assert np.array_equal(young_integral(path_small, ONE, ONE, 0.25,
                                             0.75, lv), dX)
        assert np.array_equal(rough_integral(path_small, A, ONE, ONE, 0.25,
                                             0.75, lv), dX)
        assert np.array_equal(strato_free_integral(path_small, ONE, ONE,
                                                   0.25, 0.75, lv), dX)
    assert np.allclose(pl_integral(path_small, 4, ONE, ONE, 0.25, 0.75), dX,
                       atol=1e-14)


def test_scalar_young_integral(scalar_path):
    dx = (scalar_path.at(1.0) - scalar_path.at(0.0))[0, 0]
    errs = [abs(young_integral(scalar_path, X1, ONE, 0.0, 1.0, lv)[0, 0]
                - 0.5 * dx * dx) for lv in (4, 6, 8, 10)]
    assert errs[-1] < errs[0]
    assert errs[-1] < 0.05 * (1 + dx * dx)


def test_corrected_sum_against_naive_formula(path_small):
    A = LevyAreaEval(path_small, 8)
    P, Q = Poly((0.5, -1.0, 0.7)), Poly((1.0, 0.3, 0.0, -0.2))
    fast = rough_integral(path_small, A, P, Q, 0.0, 1.0, 4)
    slow = naive_corrected_sum(path_small, A, P, Q, 4)
    assert spec_norm(fast - slow) <= 1e-11 * (1 + spec_norm(slow))


def test_corrected_sum_needs_matching_path(path_small, path_young):
    A = LevyAreaEval.finest(path_young)
    with pytest.raises(ParameterError):
        rough_integral(path_small, A, X1, ONE, 0.0, 1.0, 3)


def test_scalar_corrected_sum_is_exact(scalar_path):
    # with scalars X2_i[U] = U dX_i^2 / 2 and the corrected sum is the
    # second-order Taylor sum; for F = x^2 it telescopes exactly
    A = LevyAreaEval.finest(scalar_path)
    d = ito_defect(scalar_path, X2, 0.0, 1.0, 5, "rough", A)
    assert d < 1e-13


def test_pl_integral_gives_exact_ito_formula(path_small):
    F = Poly((0.2, -1.0, 0.5, 0.3))
    for n in (3, 8):
        assert ito_defect(path_small, F, 0.0, 1.0, n, "pl") < 1e-11 * \
            scale(path_small) ** 2


def test_pl_integral_matches_fine_riemann(path_small):
    P, Q = X2, X1
    exact = pl_integral(path_small, 2, P, Q, 0.25, 0.75)
    Xn = interpolate_dyadic(path_small, 2)
    u = np.linspace(0.25, 0.75, 20001)
    V = np.array([Xn(x) for x in u])
    M = 0.5 * (V[1:] + V[:-1])
    approx = np.einsum("kij,kjl,klm->im", eval_poly(P, M), np.diff(V, axis=0),
                       eval_poly(Q, M))
    assert spec_norm(exact - approx) <= 1e-6 * (1 + spec_norm(exact))


def test_ito_modes():
    path = sample_matrix_path(MatrixEnsembleConfig(16, 10, 0.75, 1))
    young = [ito_defect(path, X2, 0.0, 1.0, n, "young") for n in range(4, 11)]
    assert rate_estimate(RateSeries(tuple(range(4, 11)), tuple(young))) < 0
    with pytest.raises(ParameterError):
        ito_defect(path, X2, 0.0, 1.0, 4, "rough")
    with pytest.raises(ParameterError):
        ito_defect(path, X2, 0.0, 1.0, 4, "bogus")


def test_rough_ito_defect_decreases():
    path = sample_matrix_path(MatrixEnsembleConfig(16, 10, 0.35, 2))
    A = LevyAreaEval.finest(path)
    F = Poly((0.0, 0.0, 0.0, 1.0))
    ns = tuple(range(5, 11))
    errs = tuple(ito_defect(path, F, 0.0, 1.0, n, "rough", A) for n in ns)
    assert rate_estimate(RateSeries(ns, errs)) < 0


def test_young_and_corrected_sums_agree_at_high_hurst(path_young):
    A = LevyAreaEval.finest(path_young)
    gaps = [spec_norm(rough_integral(path_young, A, X2, X1, 0, 1, n)
                      - young_integral(path_young, X2, X1, 0, 1, n))
            for n in (4, 6, 8, 10)]
    assert gaps[-1] < gaps[0]


def test_scalar_stratonovich_correction(scalar_path):
    P, Q = Poly((0.3, 1.0, 0.5)), Poly((1.0, -0.4))
    lv = 6
    corr = strato_free_integral(scalar_path, P, Q, 0, 1, lv) \
        - young_integral(scalar_path, P, Q, 0, 1, lv)
    x = scalar_path.mats[:: 2 ** (10 - lv)][:-1, 0, 0]
    dP, dQ = P.derivative(), Q.derivative()
    want = 0.5 * (1 / 2 ** lv) * np.sum(dP(x) * Q(x) + P(x) * dQ(x))
    assert corr[0, 0] == pytest.approx(want, rel=1e-12)


def test_stratonovich_tracks_smooth_integral_at_half():
    path = sample_matrix_path(MatrixEnsembleConfig(32, 10, 0.5, 8))
    P, Q = X1, ONE
    gaps = [spec_norm(strato_free_integral(path, P, Q, 0, 1, n)
                      - pl_integral(path, n, P, Q, 0, 1)) for n in range(3, 11)]
    assert rate_estimate(RateSeries(tuple(range(3, 11)), tuple(gaps))) < 0


def test_riemann_grid_checks(path_small):
    with pytest.raises(ParameterError):
        young_integral(path_small, X1, ONE, 0.0, 1.0, 9)
    with pytest.raises(GridError):
        young_integral(path_small, X1, ONE, 0.1, 1.0, 4)


# ---------------------------------------------------------------- sewing

def test_sewing_constant():
    assert sewing_constant(2.0) == pytest.approx(2 + 4 * math.pi ** 2 / 6)
    with pytest.raises(ParameterError):
        sewing_constant(1.0)


def test_sewing_of_exact_increment_vanishes(path_small):
    Lam = sewing_apply(delta1(path_small), 8)
    val, cauchy = Lam.evaluate(0.25, 0.75)
    assert not np.any(val) and cauchy == 0.0


def test_sewing_scalar_oracle(scalar_path):
    M = Grid2Fn(lambda s, t: scalar_path.at(s) @ (scalar_path.at(t)
                                                  - scalar_path.at(s)), d=1)
    Lam = sewing_apply(M, 10)
    dx = (scalar_path.at(1.0) - scalar_path.at(0.0))[0, 0]
    val, cauchy = Lam.evaluate(0.0, 1.0)
    assert val[0, 0] == pytest.approx(-0.5 * dx * dx, abs=0.1)
    assert cauchy < 0.1


def test_sewing_young_envelope(path_young):
    H = 0.75
    P, Q = X2, X1
    M = Grid2Fn(lambda s, t: eval_poly(P, path_young.at(s))
                @ (path_young.at(t) - path_young.at(s))
                @ eval_poly(Q, path_young.at(s)), d=16)
    Lam = sewing_apply(M, 10)
    mu = 2 * H
    sc = scale(path_young) ** 2
    ratios = []
    for s, t in [(0.0, 1.0), (0.25, 0.5), (0.5, 0.625), (0.75, 0.8125)]:
        val, _ = Lam.evaluate(s, t)
        ratios.append(spec_norm(val) / ((t - s) ** mu * sc))
    assert max(ratios) <= sewing_constant(mu)


def test_sewing_detects_divergence():
    M = Grid2Fn(lambda s, t: (t - s) ** -0.5 * np.eye(2), d=2)
    with pytest.raises(RegimeError):
        sewing_apply(M, 6).evaluate(0.0, 1.0)
    with pytest.raises(ParameterError):
        sewing_apply(M, -1)


# ---------------------------------------------------------------- rates

def test_rate_estimate():
    ns = (1, 2, 3, 4, 5)
    assert rate_estimate(RateSeries(ns, tuple(2.0 ** -n for n in ns))) == \
        pytest.approx(-1.0)
    assert rate_estimate(RateSeries(ns, (3.0,) * 5)) == pytest.approx(0.0,
                                                                      abs=1e-12)
    with pytest.raises(ParameterError):
        rate_estimate(RateSeries((1, 2, 3), (1.0, 0.5, 0.25)))
    with pytest.raises(ParameterError):
        RateSeries((1, 2), (1.0, -1.0))
    with pytest.raises(ParameterError):
        rate_estimate(RateSeries((1, 2, 3, 4), (1.0, 0.0, 1.0, 1.0)))


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-5, max_value=5))
def test_rate_recovers_exact_power_law(slope, offset):
    ns = tuple(range(2, 9))
    errs = tuple(2.0 ** (offset + slope * n) for n in ns)
    assert rate_estimate(RateSeries(ns, errs)) == pytest.approx(slope,
                                                                abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_chen_property(a, b, c):
    path = _PATH
    s, u, t = sorted((a / 256, b / 256, c / 256))
    A = LevyAreaEval(path, 8)
    assert chen_defect(A, s, u, t, np.eye(4)) <= 1e-10 * scale(path)


_PATH = sample_matrix_path(MatrixEnsembleConfig(4, 8, 0.3, 21))
