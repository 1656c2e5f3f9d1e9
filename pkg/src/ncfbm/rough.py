"""Integration along the matrix process: increments, Levy areas, Riemann sums.

Every integral against the piecewise-linear interpolant ``X^(N)`` is computed
in closed form. On a linear piece ``X_a + theta D`` (``theta`` in ``[0, 1]``)

    int (X_u - X_s) U dX_u = (X_a - X_s) U D + 1/2 D U D,

and polynomial integrands are integrated by Gauss-Legendre rules that are
exact for their degree. Dyadic times are floats ``k / 2^n``; they are exact
in binary64 for the levels used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GridError, ParameterError, RegimeError
from .matrix_model import (DyadicInterpolant, Grid2Fn, MatrixPath,
                           interpolate_dyadic, operator_norm)
from .ncalg import Poly, eval_poly, matrix_powers, tensor_derivative

__all__ = [
    "LevyAreaEval",
    "RateSeries",
    "SewingMap",
    "delta1",
    "delta2",
    "pl_levy_area",
    "pl_levy_area_right",
    "chen_defect",
    "commutator_identity_defect",
    "level_diff",
    "young_integral",
    "rough_integral",
    "strato_free_integral",
    "pl_integral",
    "ito_defect",
    "sewing_apply",
    "sewing_constant",
    "rate_estimate",
    "scale",
    "adapted_product",
]

# pieces processed per batched matmul (bounds peak memory)
_BATCH = 512


def _norm(A) -> float:
    if np.array_equal(A, A.T):
        return operator_norm(A)
    return float(np.linalg.norm(A, 2))


def _grid_index(t: float, level: int) -> int:
    x = t * (1 << level)
    r = round(x)
    if abs(x - r) > 1e-9:
        raise GridError(f"time {t} is not a level-{level} grid point")
    return int(r)


def _check_window(s: float, t: float):
    if not 0.0 <= s <= t <= 1.0:
        raise ParameterError(f"need 0 <= s <= t <= 1, got s={s}, t={t}")


# --------------------------------------------------------------------------
# increments


def delta1(path: MatrixPath) -> Grid2Fn:
    """``(s, t) -> X_t - X_s`` on grid times of the path."""
    return Grid2Fn(lambda s, t: path.at(t) - path.at(s), path.level, path.d)


def delta2(h: Grid2Fn, s: float, u: float, t: float) -> np.ndarray:
    """``h_st - h_su - h_ut``."""
    if not s <= u <= t:
        raise ParameterError("need s <= u <= t")
    return h(s, t) - h(s, u) - h(u, t)


def adapted_product(path: MatrixPath, word: Sequence[tuple[float, float]],
                    s: float) -> np.ndarray:
    """``prod_j (X_{v_j} - X_{u_j})`` for a word with every ``v_j <= s``.

    The adaptedness of the result to time ``s`` is checked from the word.
    """
    out = np.eye(path.d)
    for u, v in word:
        if not 0.0 <= u <= v <= s:
            raise ParameterError(
                f"increment ({u}, {v}) is not adapted to time {s}")
        out = out @ (path.at(v) - path.at(u))
    return out


def scale(path: MatrixPath, U=None) -> float:
    """``(1 + ||U||)(1 + max_t ||X_t||)^2``, the tolerance normalization."""
    w = np.linalg.eigvalsh(path.mats)
    xmax = float(np.max(np.abs(w)))
    u = 0.0 if U is None else _norm(np.asarray(U, dtype=float))
    return (1.0 + u) * (1.0 + xmax) ** 2


# --------------------------------------------------------------------------
# piecewise-linear pieces


def _pieces(interp: DyadicInterpolant, s: float, t: float):
    """Start values and increments of the linear pieces of ``X^(N)`` on [s, t].

    Breakpoints are ``s``, the level-``N`` grid points strictly inside, ``t``.
    """
    _check_window(s, t)
    N = 1 << interp.n
    lo, hi = s * N, t * N
    a, b = math.floor(lo + 1e-9), math.ceil(hi - 1e-9)
    inner = np.arange(a + 1, b)
    start_on_grid = abs(lo - round(lo)) <= 1e-9
    end_on_grid = abs(hi - round(hi)) <= 1e-9
    if start_on_grid and end_on_grid:
        i0, i1 = int(round(lo)), int(round(hi))
        vals = interp.nodes[i0: i1 + 1]
    else:
        inner = inner[(inner > lo + 1e-9) & (inner < hi - 1e-9)]
        vals = np.concatenate([interp(s)[None], interp.nodes[inner],
                               interp(t)[None]]) if t > s else interp(s)[None]
    return vals[:-1], np.diff(vals, axis=0)


def _area_sum(base, starts, incs, U) -> np.ndarray:
    """``sum_j (start_j - base + D_j / 2) U D_j``."""
    d = base.shape[0]
    out = np.zeros((d, d))
    for lo in range(0, len(incs), _BATCH):
        W = starts[lo: lo + _BATCH] - base + 0.5 * incs[lo: lo + _BATCH]
        out += np.einsum("kij,jl,klm->im", W, U, incs[lo: lo + _BATCH],
                         optimize=True)
    return out


def pl_levy_area(path: MatrixPath, N: int, s: float, t: float,
                 U) -> np.ndarray:
    """``int_s^t (X^(N)_u - X^(N)_s) U dX^(N)_u`` in closed form.

    ``s`` and ``t`` may be arbitrary points of ``[0, 1]``; partial cells
    are integrated along their linear parametrization.
    """
    interp = interpolate_dyadic(path, N)
    U = np.asarray(U, dtype=float)
    if s == t:
        return np.zeros((path.d, path.d))
    starts, incs = _pieces(interp, s, t)
    return _area_sum(starts[0], starts, incs, U)


def pl_levy_area_right(path: MatrixPath, N: int, s: float, t: float,
                       U) -> np.ndarray:
    """``int_s^t dX^(N)_u U (X^(N)_u - X^(N)_s)`` in closed form."""
    interp = interpolate_dyadic(path, N)
    U = np.asarray(U, dtype=float)
    if s == t:
        return np.zeros((path.d, path.d))
    starts, incs = _pieces(interp, s, t)
    base = starts[0]
    out = np.zeros((path.d, path.d))
    for lo in range(0, len(incs), _BATCH):
        W = starts[lo: lo + _BATCH] - base + 0.5 * incs[lo: lo + _BATCH]
        out += np.einsum("kij,jl,klm->im", incs[lo: lo + _BATCH], U, W,
                         optimize=True)
    return out


@dataclass
class LevyAreaEval:
    """Approximated Levy area at interpolation level ``N``.

    ``area(s, t, U)`` is linear in ``U`` and vanishes for ``s == t``.
    :meth:`certificate` reports the two-level Cauchy estimate
    ``||X2^(N) - X2^(N-1)||`` that stands in for convergence in ``N``.
    """

    path: MatrixPath
    N: int
    _interp: DyadicInterpolant = field(init=False, repr=False)

    def __post_init__(self):
        self._interp = interpolate_dyadic(self.path, self.N)

    @classmethod
    def finest(cls, path: MatrixPath) -> "LevyAreaEval":
        return cls(path, path.level)

    def __call__(self, s: float, t: float, U) -> np.ndarray:
        return pl_levy_area(self.path, self.N, s, t, U)

    def right(self, s: float, t: float, U) -> np.ndarray:
        return pl_levy_area_right(self.path, self.N, s, t, U)

    def certificate(self, s: float, t: float, U) -> float:
        if self.N == 0:
            return float("nan")
        return _norm(self(s, t, U) - pl_levy_area(self.path, self.N - 1,
                                                  s, t, U))

    def cells(self, n: int, s: float, t: float, Us) -> np.ndarray:
        """Areas over every level-``n`` cell of ``[s, t]``.

        ``Us`` has shape ``(C, R, d, d)``: ``R`` matrices per cell, ``C`` the
        number of cells. Returns the same shape.
        """
        if n > self.N:
            raise ParameterError(
                f"cell level {n} finer than the area level {self.N}")
        i0, i1 = _grid_index(s, n), _grid_index(t, n)
        m = 1 << (self.N - n)
        nodes = self._interp.nodes[i0 * m: i1 * m + 1]
        d = nodes.shape[-1]
        C = i1 - i0
        Us = np.asarray(Us, dtype=float)
        out = np.zeros_like(Us)
        step = max(1, _BATCH // m)
        for c0 in range(0, C, step):
            c1 = min(C, c0 + step)
            blk = nodes[c0 * m: c1 * m + 1]
            starts = blk[:-1].reshape(c1 - c0, m, d, d)
            incs = np.diff(blk, axis=0).reshape(c1 - c0, m, d, d)
            W = starts - starts[:, :1] + 0.5 * incs
            for r in range(Us.shape[1]):
                WU = W @ Us[c0:c1, r][:, None]
                out[c0:c1, r] = np.einsum("ckij,ckjl->cil", WU, incs,
                                          optimize=True)
        return out


def chen_defect(area: LevyAreaEval, s: float, u: float, t: float,
                U) -> float:
    """``||X2_st - X2_su - X2_ut - dX_su U dX_ut||`` for ``X^(N)``."""
    if not s <= u <= t:
        raise ParameterError("need s <= u <= t")
    interp = area._interp
    U = np.asarray(U, dtype=float)
    gap = area(s, t, U) - area(s, u, U) - area(u, t, U) \
        - (interp(u) - interp(s)) @ U @ (interp(t) - interp(u))
    return _norm(gap)


def commutator_identity_defect(path: MatrixPath, n: int) -> float:
    """``||X2^(n)_01[1] - X_1^2 / 2 - 1/2 sum_i [X_ti, X_ti+1]||``."""
    interp = interpolate_dyadic(path, n)
    lhs = pl_levy_area(path, n, 0.0, 1.0, np.eye(path.d))
    X = interp.nodes
    comm = np.einsum("kij,kjl->il", X[:-1], X[1:]) \
        - np.einsum("kij,kjl->il", X[1:], X[:-1])
    rhs = 0.5 * X[-1] @ X[-1] + 0.5 * comm
    return _norm(lhs - rhs)


def level_diff(path: MatrixPath, n: int, k: int, l: int, U):
    """Area difference between levels ``n+1`` and ``n`` on ``[k, l] 2^-n``.

    Returns ``(direct, reduced)``: the difference of the two closed-form
    areas, and ``1/2 sum_{i=k}^{l-1} (Y_2i U Y_2i+1 - Y_2i+1 U Y_2i)`` with
    ``Y`` the level-``(n+1)`` increments.
    """
    if path.level is None or n + 1 > path.level:
        raise GridError(f"level_diff at n={n} needs a path of level >= {n + 1}")
    if not 0 <= k < l <= (1 << n):
        raise GridError(f"window [{k}, {l}] is not a level-{n} window")
    U = np.asarray(U, dtype=float)
    s, t = k / float(1 << n), l / float(1 << n)
    direct = pl_levy_area(path, n + 1, s, t, U) - pl_levy_area(path, n, s, t, U)
    fine = interpolate_dyadic(path, n + 1).nodes[2 * k: 2 * l + 1]
    Y = np.diff(fine, axis=0)
    Ye, Yo = Y[0::2], Y[1::2]
    reduced = 0.5 * (np.einsum("kij,jl,klm->im", Ye, U, Yo, optimize=True)
                     - np.einsum("kij,jl,klm->im", Yo, U, Ye, optimize=True))
    return direct, reduced


# --------------------------------------------------------------------------
# Riemann sums and integrals


def _nodes(path: MatrixPath, level: int, s: float, t: float) -> np.ndarray:
    if path.level is None:
        raise GridError("Riemann sums need a dyadic path")
    if level > path.level:
        raise ParameterError(
            f"level {level} exceeds the path level {path.level}")
    _check_window(s, t)
    i0, i1 = _grid_index(s, level), _grid_index(t, level)
    stride = 1 << (path.level - level)
    return path.mats[i0 * stride: i1 * stride + 1: stride]


def _lsum(A, B, C=None) -> np.ndarray:
    """``sum_k A_k B_k (C_k)`` over a stack, batched."""
    out = np.zeros(A.shape[1:])
    for lo in range(0, A.shape[0], _BATCH):
        prod = A[lo: lo + _BATCH] @ B[lo: lo + _BATCH]
        if C is not None:
            prod = prod @ C[lo: lo + _BATCH]
        out += prod.sum(axis=0)
    return out


def young_integral(path: MatrixPath, P: Poly, Q: Poly, s: float, t: float,
                   level: int) -> np.ndarray:
    """Left-point Riemann sum ``sum_i P(X_ti) dX_i Q(X_ti)`` at one level."""
    X = _nodes(path, level, s, t)
    if len(X) < 2:
        return np.zeros((path.d, path.d))
    Xl, D = X[:-1], np.diff(X, axis=0)
    return _lsum(eval_poly(P, Xl), D, eval_poly(Q, Xl))


def _shifted(coeffs: Sequence[float], powers, r: int) -> np.ndarray:
    """``sum_{k > r} a_k X^{k-1-r}`` on a stack of power tables."""
    out = np.zeros_like(powers[0])
    for k in range(r + 1, len(coeffs)):
        if coeffs[k] != 0.0:
            out = out + coeffs[k] * powers[k - 1 - r]
    return out


def rough_integral(path: MatrixPath, area: LevyAreaEval, P: Poly, Q: Poly,
                   s: float, t: float, level: int) -> np.ndarray:
    """Corrected Riemann sum.

    ``sum_i P dX_i Q + (dP # X2_i) Q + P (X2*_i # dQ)`` with all polynomials
    at ``X_ti``, ``(A (x) B) # X2 = A X2[B]`` and
    ``X2* # (A (x) B) = X2[A^T]^T B``.
    """
    if area.path is not path:
        raise ParameterError("area must be built on the same path")
    X = _nodes(path, level, s, t)
    d = path.d
    if len(X) < 2:
        return np.zeros((d, d))
    Xl, D = X[:-1], np.diff(X, axis=0)
    PX, QX = eval_poly(P, Xl), eval_poly(Q, Xl)
    out = _lsum(PX, D, QX)
    p, q = max(P.degree, 0), max(Q.degree, 0)
    top = max(p, q)
    if top == 0:
        return out
    pw = [np.broadcast_to(np.eye(d), Xl.shape).copy()]
    for _ in range(top):
        pw.append(pw[-1] @ Xl)
    Us = np.stack(pw[:top], axis=1)
    A = area.cells(level, s, t, Us)
    for r in range(p):
        out += _lsum(_shifted(P.coeffs, pw, r), A[:, r], QX)
    for j in range(q):
        out += _lsum(PX, np.swapaxes(A[:, j], -1, -2),
                     _shifted(Q.coeffs, pw, j))
    return out


def strato_free_integral(path: MatrixPath, P: Poly, Q: Poly, s: float,
                         t: float, level: int) -> np.ndarray:
    """Riemann sum plus ``1/2 sum_i dt_i (Id x phi x Id)[dP (x) Q + P (x) dQ]``.

    With ``dP(X) = sum_k a_k sum_r X^r (x) X^{k-1-r}``, the contraction
    gives ``phi(X^{k-1-r}) X^r Q`` and ``phi(X^j) P X^{k-1-j}``.
    """
    X = _nodes(path, level, s, t)
    d = path.d
    if len(X) < 2:
        return np.zeros((d, d))
    Xl = X[:-1]
    dt = (t - s) / len(Xl)
    out = young_integral(path, P, Q, s, t, level)
    p, q = max(P.degree, 0), max(Q.degree, 0)
    top = max(p, q)
    if top == 0:
        return out
    pw = [np.broadcast_to(np.eye(d), Xl.shape).copy()]
    for _ in range(top):
        pw.append(pw[-1] @ Xl)
    tr = [np.trace(m, axis1=-2, axis2=-1) / d for m in pw]
    PX, QX = eval_poly(P, Xl), eval_poly(Q, Xl)
    corr = np.zeros_like(Xl)
    for k in range(1, len(P.coeffs)):
        for r in range(k):
            corr += P.coeffs[k] * tr[k - 1 - r][:, None, None] * (pw[r] @ QX)
    for k in range(1, len(Q.coeffs)):
        for j in range(k):
            corr += Q.coeffs[k] * tr[j][:, None, None] * (PX @ pw[k - 1 - j])
    return out + 0.5 * dt * corr.sum(axis=0)


def pl_integral(path: MatrixPath, n: int, P: Poly, Q: Poly, s: float,
                t: float) -> np.ndarray:
    """``int_s^t P(X^(n)_u) dX^(n)_u Q(X^(n)_u)``, exact by Gauss-Legendre."""
    interp = interpolate_dyadic(path, n)
    if s == t:
        return np.zeros((path.d, path.d))
    starts, incs = _pieces(interp, s, t)
    deg = max(P.degree, 0) + max(Q.degree, 0)
    nodes, weights = np.polynomial.legendre.leggauss(max(1, (deg + 2) // 2))
    theta, weights = 0.5 * (nodes + 1.0), 0.5 * weights
    out = np.zeros((path.d, path.d))
    for th, w in zip(theta, weights):
        Z = starts + th * incs
        out += w * _lsum(eval_poly(P, Z), incs, eval_poly(Q, Z))
    return out


def _ito_terms(F: Poly):
    """``dF = sum_k a_k sum_i x^i (x) x^{k-1-i}`` as ``(c, P, Q)`` triples."""
    return [(c, Poly.monomial(a), Poly.monomial(b))
            for c, a, b in tensor_derivative(F).terms]


def ito_defect(path: MatrixPath, F: Poly, s: float, t: float, level: int,
               mode: str = "young", area: LevyAreaEval | None = None) -> float:
    """``||F(X_t) - F(X_s) - int dF(X_u) # dX_u||`` for one integral scheme.

    ``mode`` is ``"young"`` (plain Riemann sums), ``"rough"`` (corrected sums,
    needs ``area``), ``"strato"`` (free Stratonovich sums) or ``"pl"`` (exact
    integral along ``X^(level)``).
    """
    lhs = eval_poly(F, path.at(t)) - eval_poly(F, path.at(s))
    rhs = np.zeros_like(lhs)
    for c, P, Q in _ito_terms(F):
        if mode == "young":
            val = young_integral(path, P, Q, s, t, level)
        elif mode == "rough":
            if area is None:
                raise ParameterError("rough mode needs a Levy area")
            val = rough_integral(path, area, P, Q, s, t, level)
        elif mode == "strato":
            val = strato_free_integral(path, P, Q, s, t, level)
        elif mode == "pl":
            val = pl_integral(path, level, P, Q, s, t)
        else:
            raise ParameterError(f"unknown mode {mode!r}")
        rhs += c * val
    return _norm(lhs - rhs)


# --------------------------------------------------------------------------
# sewing and rates


def sewing_constant(mu: float) -> float:
    """``c_mu = 2 + 2^mu zeta(mu)`` for ``mu > 1``."""
    from scipy.special import zeta
    if not mu > 1.0:
        raise ParameterError("mu must exceed 1")
    return 2.0 + 2.0 ** mu * float(zeta(mu))


class SewingMap(Grid2Fn):
    """``(s, t) -> M_st - sum of M over the finest partition of [s, t]``.

    :meth:`evaluate` also returns the two-level Cauchy estimate.
    """

    def __init__(self, M: Grid2Fn, level: int, d: int | None = None):
        super().__init__(self._value, level, d if d is not None else M.d)
        self.M = M

    def _partition_sum(self, s, t, lv):
        i0, i1 = _grid_index(s, lv), _grid_index(t, lv)
        h = 1.0 / (1 << lv)
        return sum(self.M(i * h, (i + 1) * h) for i in range(i0, i1))

    def evaluate(self, s: float, t: float):
        _check_window(s, t)
        lv = self.level
        fine = self._partition_sum(s, t, lv)
        if lv >= 2 and _on_grid(s, t, lv - 2):
            mid = self._partition_sum(s, t, lv - 1)
            low = self._partition_sum(s, t, lv - 2)
            e_fine, e_prev = _norm(fine - mid), _norm(mid - low)
            tol = 1e-12 * (1.0 + _norm(fine))
            if e_fine > 2.0 * e_prev + tol:
                raise RegimeError(
                    f"refinement is not Cauchy on [{s}, {t}]: estimate grew "
                    f"from {e_prev:.3e} to {e_fine:.3e}")
        elif lv >= 1 and _on_grid(s, t, lv - 1):
            e_fine = _norm(fine - self._partition_sum(s, t, lv - 1))
        else:
            e_fine = float("nan")
        return self.M(s, t) - fine, e_fine

    def _value(self, s, t):
        return self.evaluate(s, t)[0]


def _on_grid(s, t, lv) -> bool:
    try:
        _grid_index(s, lv)
        _grid_index(t, lv)
        return True
    except GridError:
        return False


def sewing_apply(M: Grid2Fn, level: int) -> SewingMap:
    """Correction map ``Lambda(delta M)`` computed at dyadic level ``level``.

    Raises :class:`RegimeError` on evaluation when the last Cauchy estimate
    exceeds twice the previous one (refinement not contracting).
    """
    if level < 0:
        raise ParameterError("level must be >= 0")
    return SewingMap(M, level)


@dataclass(frozen=True)
class RateSeries:
    """Pairs ``(n, error)`` with nonnegative errors."""

    ns: tuple[int, ...]
    errors: tuple[float, ...]

    def __post_init__(self):
        if len(self.ns) != len(self.errors):
            raise ParameterError("ns and errors differ in length")
        if any(e < 0 for e in self.errors):
            raise ParameterError("errors must be nonnegative")


def rate_estimate(series: RateSeries) -> float:
    """Least-squares slope of ``log2(error)`` against ``n``."""
    if len(series.ns) < 4:
        raise ParameterError("rate estimation needs at least 4 points")
    err = np.asarray(series.errors, dtype=float)
    if np.any(err <= 0):
        raise ParameterError("rate estimation needs positive errors")
    return float(np.polyfit(np.asarray(series.ns, float), np.log2(err), 1)[0])
