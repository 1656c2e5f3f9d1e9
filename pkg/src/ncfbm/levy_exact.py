"""Exact second moments of dyadic Levy-area differences.

For the level-``(n+1)`` increments ``Y_i`` of the fractional semicircular
process, the difference between the level-``(n+1)`` and level-``n``
approximated Levy areas over ``[0, 1]`` is

    D_n = 1/2 sum_i (Y_{2i} Y_{2i+1} - Y_{2i+1} Y_{2i})

and ``M(n) = phi(D_n D_n^*)``. Two independent evaluations are provided:

* :func:`m_n_closed` : a one-dimensional sum of ``gamma_H`` values;
* :func:`m_n_wick_oracle` : products of increment covariances taken from
  :mod:`ncfbm.kernel` (no ``gamma_H`` involved).

Their agreement is the central consistency check of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom, zeta

from .errors import ParameterError, SizeLimitError
from .kernel import FBMKernel, Letter, cov_matrix, letter_cov, _check_hurst

__all__ = [
    "ZETA3",
    "LevyGap",
    "CovaDiag",
    "gamma_H",
    "f_H",
    "m_n_closed",
    "m_n_wick_oracle",
    "m_n_lower_bound",
    "lower_bound_constant",
    "cova_sum_diag",
    "increment_cov",
]

ZETA3 = 1.2020569031595942854

CLOSED_N_CAP = 40
ORACLE_N_CAP = 14
LITERAL_N_CAP = 6
# beyond this many terms the closed-form sum switches to an asymptotic tail
_DIRECT_TERMS = 1 << 20
_SERIES_FROM = 8.0
_SERIES_TERMS = 14


@dataclass(frozen=True)
class LevyGap:
    """``M(n)`` at Hurst index ``H``."""

    H: float
    n: int
    value: float
    method: str = "closed"

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ParameterError("LevyGap value must be finite")


def _d2(a: float, y):
    """Second difference ``|y+1|^a + |y-1|^a - 2|y|^a`` for real ``y``.

    For ``|y| >= 8`` the binomial series ``2|y|^a sum_m C(a,2m) y^-2m`` is
    used; the direct form loses all digits once ``|y|`` is large.
    """
    y = np.abs(np.asarray(y, dtype=float))
    out = np.empty_like(y)
    small = y < _SERIES_FROM
    ys = y[small]
    with np.errstate(divide="ignore"):
        out[small] = (np.where(ys + 1 > 0, (ys + 1) ** a, 0.0)
                      + np.where(np.abs(ys - 1) > 0, np.abs(ys - 1) ** a, 0.0)
                      - 2.0 * np.where(ys > 0, ys ** a, 0.0))
    yl = y[~small]
    if yl.size:
        inv2 = 1.0 / (yl * yl)
        acc = np.zeros_like(yl)
        # Horner in y^-2 over C(a, 2m), m = 1..M
        for m in range(_SERIES_TERMS, 0, -1):
            acc = (acc + binom(a, 2 * m)) * inv2
        out[~small] = 2.0 * yl ** a * acc
    return out


def gamma_H(H: float, k):
    """``Gamma_H(k) = d2(k)^2 - d2(k-1) d2(k+1)`` (vectorized over ``k``).

    ``d2`` is the symmetric second difference of ``|.|^{2H}``; the value at
    ``k = 0`` is ``2^{2H} (4 - 2^{2H})``.
    """
    H = _check_hurst(H)
    a = 2.0 * H
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise ParameterError("k must be nonnegative")
    out = _d2(a, k_arr) ** 2 - _d2(a, k_arr - 1) * _d2(a, k_arr + 1)
    return float(out) if out.ndim == 0 else out


def f_H(H: float, x):
    """The auxiliary function with ``Gamma_H(k) = -k^{4H} f_H(1/k)``.

    Accepts ``x`` in ``[0, 1]``; ``|1-2x|`` replaces ``1-2x`` so that ``x = 1``
    (``k = 1``) is covered. Evaluated through second differences at ``1/x``.
    """
    H = _check_hurst(H)
    a = 2.0 * H
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(x_arr > 1):
        raise ParameterError("x must lie in [0, 1]")
    out = np.zeros_like(x_arr)
    nz = x_arr > 0
    if np.any(nz):
        xv = x_arr[nz]
        y = 1.0 / xv
        # brackets scaled by y^a are -d2 at y-1, y+1 and y
        out[nz] = xv ** (2 * a) * (_d2(a, y - 1) * _d2(a, y + 1)
                                   - _d2(a, y) ** 2)
    return float(out) if out.ndim == 0 else out


def _check_n(n, cap):
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ParameterError(f"n must be a nonnegative integer, got {n!r}")
    if n > cap:
        raise SizeLimitError(f"n={n} exceeds the cap {cap}")
    return int(n)


def _weighted_gamma_sum(H: float, N: int) -> float:
    """``sum_{k=1}^{N-1} (1 - k/N) Gamma_H(2k)`` with an exact-rounded sum."""
    K = min(N, _DIRECT_TERMS)
    if K > 1:
        k = np.arange(1, K, dtype=float)
        total = math.fsum((1.0 - k / N) * gamma_H(H, 2 * k))
    else:
        total = 0.0
    if N > K:
        # Gamma_H(2k) ~ c (2k)^{4H-6}; sum the remaining terms through
        # Hurwitz zeta functions with c fitted at the switch point
        p = 6.0 - 4.0 * H
        c = gamma_H(H, 2.0 * K) * (2.0 * K) ** p
        s0 = zeta(p, K) - zeta(p, N)
        s1 = zeta(p - 1.0, K) - zeta(p - 1.0, N)
        total += c * 2.0 ** (-p) * (s0 - s1 / N)
    return total


def m_n_closed(H: float, n: int) -> LevyGap:
    """``M(n)`` from the one-dimensional ``gamma_H`` sum (``n <= 40``).

    ``M(n) = 2^{n(1-4H)} / 2^{4H+3} * (Gamma_H(0) + 2 sum_k (1-k/2^n)
    Gamma_H(2k))``. Terms past ``2^20`` are replaced by their leading
    asymptotics, which only matters for ``n > 20``.
    """
    H = _check_hurst(H)
    n = _check_n(n, CLOSED_N_CAP)
    N = 1 << n
    bracket = gamma_H(H, 0) + 2.0 * _weighted_gamma_sum(H, N)
    value = 2.0 ** (n * (1.0 - 4.0 * H)) / 2.0 ** (4.0 * H + 3.0) * bracket
    return LevyGap(H, n, value, "closed")


def lower_bound_constant(H: float) -> float:
    """``(Gamma_H(0) - zeta(3)/2) / 2^{4H+3}``, positive for ``H <= 1/4``."""
    H = _check_hurst(H)
    return (gamma_H(H, 0) - 0.5 * ZETA3) / 2.0 ** (4.0 * H + 3.0)


def m_n_lower_bound(H: float, n: int) -> float:
    """``2^{n(1-4H)} * lower_bound_constant(H)``; a valid bound for ``H <= 1/4``."""
    return 2.0 ** (n * (1.0 - 4.0 * H)) * lower_bound_constant(H)


def _level_increments(n: int, idx) -> list[Letter]:
    h = 2.0 ** -(n + 1)
    return [Letter.increment(i * h, (i + 1) * h) for i in idx]


def _delta(C, i, j):
    # C indexed by level-(n+1) increment number
    return (C[2 * i, 2 * j] * C[2 * i + 1, 2 * j + 1]
            - C[2 * i, 2 * j + 1] * C[2 * j, 2 * i + 1])


def m_n_wick_oracle(H: float, n: int, method: str = "auto") -> LevyGap:
    """``M(n) = 1/2 sum_{i,j} Delta(i, j)`` from increment covariances.

    ``Delta(i,j) = phi(Y_2i Y_2j) phi(Y_2i+1 Y_2j+1)
    - phi(Y_2i Y_2j+1) phi(Y_2j Y_2i+1)``.

    Parameters
    ----------
    method : {"auto", "stationary", "literal"}
        ``"literal"`` forms the full double sum (``n <= 6``).
        ``"stationary"`` uses that ``Delta(i, j)`` only depends on ``j - i``
        (``n <= 14``). ``"auto"`` picks literal when allowed.
    """
    H = _check_hurst(H)
    n = _check_n(n, ORACLE_N_CAP)
    K = FBMKernel(H)
    N = 1 << n
    if method == "auto":
        method = "literal" if n <= LITERAL_N_CAP else "stationary"
    if method == "literal":
        if n > LITERAL_N_CAP:
            raise SizeLimitError(f"literal double sum capped at n <= "
                                 f"{LITERAL_N_CAP}")
        C = cov_matrix(K, _level_increments(n, range(2 * N)))
        I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        value = 0.5 * math.fsum(_delta(C, I, J).ravel())
    elif method == "stationary":
        Y0, Y1 = _level_increments(n, (0, 1))
        terms = np.empty(N)
        for k in range(N):
            Ya, Yb = _level_increments(n, (2 * k, 2 * k + 1))
            terms[k] = (letter_cov(K, Y0, Ya) * letter_cov(K, Y1, Yb)
                        - letter_cov(K, Y0, Yb) * letter_cov(K, Ya, Y1))
        weights = np.where(np.arange(N) == 0, N, 2.0 * (N - np.arange(N)))
        value = 0.5 * math.fsum(weights * terms)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return LevyGap(H, n, value, "oracle-" + method)


def increment_cov(H: float, a, b, c, d):
    """``phi(dX_ab dX_cd)`` for the fractional kernel (vectorized)."""
    e = 2.0 * H
    ap = lambda x: np.abs(x) ** e  # noqa: E731
    return 0.5 * (ap(np.asarray(d) - a) + ap(np.asarray(c) - b)
                  - ap(np.asarray(c) - a) - ap(np.asarray(d) - b))


@dataclass(frozen=True)
class CovaDiag:
    """Covariance sums over the window ``[k 2^-n, l 2^-n]`` and their ratios
    to the corresponding bound shapes (constants omitted)."""

    H: float
    n: int
    k: int
    l: int
    eps: float
    sums: dict = field(default_factory=dict)
    bound: float = float("nan")
    ratio: float = float("nan")


def cova_sum_diag(H: float, n: int, k: int, l: int, eps: float,
                  u: float | None = None, v: float | None = None) -> CovaDiag:
    """Exact covariance sums for the area-difference estimates.

    Without ``(u, v)``: the sums over ``i, j`` in ``[k, l)`` of
    ``phi(Y_2i Y_2j)^2``, ``phi(Y_2i Y_2j+1)^2`` and ``phi(Y_2i+1 Y_2j+1)^2``;
    their maximum is compared with ``|t-s|^{4H-2eps} 2^{-2 n eps}``, which
    needs ``0 < eps < 2H - 1/2``.

    With ``0 <= u <= v <= s``: the sums over ``i`` of ``phi(dX_uv Y_2i)^2``
    and ``phi(dX_uv Y_2i+1)^2``, compared with
    ``|v-u|^{2H} |t-s|^{2H-eps} 2^{-n eps}`` for ``0 <= eps < H``.
    """
    H = _check_hurst(H)
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ParameterError("n must be a nonnegative integer")
    if not (0 <= k < l <= (1 << n)):
        raise ParameterError(f"need 0 <= k < l <= 2^n, got k={k}, l={l}")
    h = 2.0 ** -(n + 1)
    s, t = k * 2.0 ** -n, l * 2.0 ** -n
    idx = np.arange(k, l)
    ev0, ev1 = 2 * idx * h, (2 * idx + 1) * h
    od0, od1 = ev1, (2 * idx + 2) * h
    if u is None and v is None:
        if not 0.0 < eps < 2.0 * H - 0.5:
            raise ParameterError(
                f"eps must lie in (0, 2H - 1/2) = (0, {2 * H - 0.5:g})")
        cee = increment_cov(H, ev0[:, None], ev1[:, None], ev0[None], ev1[None])
        ceo = increment_cov(H, ev0[:, None], ev1[:, None], od0[None], od1[None])
        coo = increment_cov(H, od0[:, None], od1[:, None], od0[None], od1[None])
        sums = {"even_even": math.fsum((cee ** 2).ravel()),
                "even_odd": math.fsum((ceo ** 2).ravel()),
                "odd_odd": math.fsum((coo ** 2).ravel())}
        bound = (t - s) ** (4 * H - 2 * eps) * 2.0 ** (-2 * n * eps)
    else:
        if u is None or v is None or not 0.0 <= u <= v <= s:
            raise ParameterError("need 0 <= u <= v <= s for the increment sums")
        if not 0.0 <= eps < H:
            raise ParameterError(f"eps must lie in [0, H) = [0, {H:g})")
        sums = {"inc_even": math.fsum(increment_cov(H, u, v, ev0, ev1) ** 2),
                "inc_odd": math.fsum(increment_cov(H, u, v, od0, od1) ** 2)}
        bound = ((v - u) ** (2 * H) * (t - s) ** (2 * H - eps)
                 * 2.0 ** (-n * eps))
    lhs = max(sums.values())
    ratio = lhs / bound if bound > 0 else float("inf")
    return CovaDiag(H, int(n), int(k), int(l), float(eps), sums, bound, ratio)
