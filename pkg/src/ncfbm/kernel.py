"""Covariance kernels and letters (linear combinations of process values).

A *letter* is a finite real combination ``sum_k c_k X_{t_k}``; increments
``X_b - X_a`` are the letters ``[(+1, b), (-1, a)]``. Every second moment used
elsewhere in the package is obtained from :func:`letter_cov`, the bilinear
extension of a kernel ``R(s, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ParameterError

__all__ = [
    "Letter",
    "CovKernel",
    "FBMKernel",
    "StationarySumKernel",
    "TabulatedKernel",
    "fbm_cov",
    "letter_cov",
    "partial_sum_cov",
    "fgn_rho",
    "white_rho",
    "cov_matrix",
    "min_eigenvalue",
]


def _check_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise ParameterError(f"Hurst index must lie in (0, 1), got {H}")
    return H


def _abs_pow(x, e):
    """``|x|**e`` with an exact 0 at ``x == 0`` (``e > 0``)."""
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        out = np.exp(e * np.log(x))
    return np.where(x == 0.0, 0.0, out)


def fbm_cov(H: float, s, t):
    """Fractional covariance ``(s^2H + t^2H - |t-s|^2H) / 2``.

    Vectorized over ``s`` and ``t``; returns a float for scalar input.
    """
    H = _check_hurst(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ParameterError("times must be nonnegative")
    e = 2.0 * H
    out = 0.5 * (_abs_pow(s, e) + _abs_pow(t, e) - _abs_pow(t - s, e))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Letter:
    """``sum_k coef_k * X_{time_k}``, canonicalized (merged, sorted, no zeros)."""

    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        merged: dict[float, float] = {}
        for c, t in self.terms:
            t = float(t)
            if not 0.0 <= t <= 1.0:
                raise ParameterError(f"letter time {t} outside [0, 1]")
            merged[t] = merged.get(t, 0.0) + float(c)
        canon = tuple((c, t) for t, c in sorted(merged.items()) if c != 0.0)
        object.__setattr__(self, "terms", canon)

    @classmethod
    def point(cls, t: float, coef: float = 1.0) -> "Letter":
        return cls(((coef, t),))

    @classmethod
    def increment(cls, a: float, b: float) -> "Letter":
        """The increment ``X_b - X_a``."""
        return cls(((1.0, b), (-1.0, a)))

    @property
    def coefs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def times(self) -> np.ndarray:
        return np.array([t for _, t in self.terms])

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Letter") -> "Letter":
        return Letter(self.terms + other.terms)

    def __sub__(self, other: "Letter") -> "Letter":
        return self + (-1.0) * other

    def __mul__(self, c: float) -> "Letter":
        return Letter(tuple((c * a, t) for a, t in self.terms))

    __rmul__ = __mul__

    def __neg__(self) -> "Letter":
        return (-1.0) * self

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return "+".join(f"{c:g}*X({t:g})" for c, t in self.terms)


class CovKernel:
    """Base class: a symmetric covariance ``R(s, t)`` on ``[0, 1]^2``."""

    kind = "abstract"

    def __call__(self, s, t):
        raise NotImplementedError

    def bilinear(self, ca, ta, cb, tb) -> float:
        """``sum_{k,l} ca_k cb_l R(ta_k, tb_l)``."""
        if len(ca) == 0 or len(cb) == 0:
            return 0.0
        R = self(np.asarray(ta)[:, None], np.asarray(tb)[None, :])
        return float(np.asarray(ca) @ R @ np.asarray(cb))


class FBMKernel(CovKernel):
    """Fractional kernel with Hurst index ``H``.

    The bilinear form drops the ``s^2H`` and ``t^2H`` parts whenever a letter's
    coefficients sum to zero, so increment covariances never go through the
    cancellation of O(1) kernel values.
    """

    kind = "fbm"

    def __init__(self, H: float):
        self.H = _check_hurst(H)

    def __call__(self, s, t):
        return fbm_cov(self.H, s, t)

    def bilinear(self, ca, ta, cb, tb) -> float:
        if len(ca) == 0 or len(cb) == 0:
            return 0.0
        ca, ta = np.asarray(ca, float), np.asarray(ta, float)
        cb, tb = np.asarray(cb, float), np.asarray(tb, float)
        e = 2.0 * self.H
        sa, sb = ca.sum(), cb.sum()
        out = -(ca @ _abs_pow(ta[:, None] - tb[None, :], e) @ cb)
        if sb != 0.0:
            out += sb * (ca @ _abs_pow(ta, e))
        if sa != 0.0:
            out += sa * (cb @ _abs_pow(tb, e))
        return 0.5 * float(out)

    def __repr__(self):
        return f"FBMKernel(H={self.H})"


def fgn_rho(H: float) -> Callable[[np.ndarray], np.ndarray]:
    """Fractional Gaussian noise autocovariance ``rho_H(k)``."""
    H = _check_hurst(H)
    e = 2.0 * H

    def rho(k):
        k = np.asarray(k, dtype=float)
        return 0.5 * (_abs_pow(k + 1, e) + _abs_pow(k - 1, e)
                      - 2.0 * _abs_pow(k, e))

    return rho


def white_rho(k):
    """``rho(0) = 1`` and ``rho(k) = 0`` otherwise."""
    return (np.asarray(k) == 0).astype(float)


def _grid_floor(x: float) -> int:
    # n*t computed in binary64 can land a hair below an integer (0.3*10)
    return int(floor(x + 1e-9))


def partial_sum_cov(rho, n: int, s: float, t: float, H: float) -> float:
    """Covariance of normalized partial sums ``V_s, V_t``.

    ``V_t = n^{-H} sum_{k <= floor(n t)} U_k`` for a stationary sequence with
    ``cov(U_k, U_l) = rho(k - l)``; the slowly varying factor is fixed to 1.
    """
    if not isinstance(n, (int, np.integer)) or n <= 0:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    H = _check_hurst(H)
    a, b = _grid_floor(n * s), _grid_floor(n * t)
    if a == 0 or b == 0:
        return 0.0
    m = np.arange(-(b - 1), a)
    counts = np.minimum(a, b + m) - np.maximum(1, 1 + m) + 1
    total = float(np.sum(np.asarray(rho(m), dtype=float) * counts))
    return total / float(n) ** (2.0 * H)


class StationarySumKernel(CovKernel):
    """Kernel of the normalized partial sums of a stationary sequence."""

    kind = "stationary_sum"

    def __init__(self, rho, H: float, n: int):
        self.rho = rho
        self.H = _check_hurst(H)
        self.n = int(n)

    def __call__(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        out = np.empty(s.shape)
        for idx in np.ndindex(s.shape):
            out[idx] = partial_sum_cov(self.rho, self.n, s[idx], t[idx],
                                       self.H)
        return float(out) if out.ndim == 0 else out


class TabulatedKernel(CovKernel):
    """Kernel given on a tensor grid, bilinearly interpolated in between."""

    kind = "tabulated"

    def __init__(self, grid: Sequence[float], values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size, grid.size):
            raise ParameterError("values must be a square table on the grid")
        if not np.allclose(values, values.T, atol=1e-12):
            raise ParameterError("tabulated kernel must be symmetric")
        self.grid = grid
        self.values = 0.5 * (values + values.T)
        self._interp = RegularGridInterpolator((grid, grid), self.values)

    def __call__(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        out = self._interp(np.stack([s.ravel(), t.ravel()], axis=-1))
        out = out.reshape(s.shape)
        return float(out) if out.ndim == 0 else out


def letter_cov(K: CovKernel, a: Letter, b: Letter) -> float:
    """``phi(a b)`` for letters ``a, b`` under kernel ``K``."""
    return K.bilinear(a.coefs, a.times, b.coefs, b.times)


def cov_matrix(K: CovKernel, letters: Iterable[Letter]) -> np.ndarray:
    """Gram matrix ``[letter_cov(K, a, b)]`` of a list of letters."""
    letters = list(letters)
    n = len(letters)
    C = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            C[i, j] = C[j, i] = letter_cov(K, letters[i], letters[j])
    return C


def min_eigenvalue(K: CovKernel, grid) -> float:
    """Smallest eigenvalue of the symmetrized kernel matrix on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    R = np.asarray(K(grid[:, None], grid[None, :]), dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (R + R.T))[0])
