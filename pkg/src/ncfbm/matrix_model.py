"""Symmetric random-matrix realization of the fractional semicircular process.

Entries ``B(i, j)``, ``i <= j``, are independent scalar fractional Brownian
motions; the matrix process is ``M_t(i, j) = B_t(i, j) / sqrt(d)`` off the
diagonal and ``sqrt(2) B_t(i, i) / sqrt(d)`` on it, symmetrized. The
normalized trace plays the role of the state ``phi``.

Sampling
--------
Uniform grids ``{0, h, ..., N h}`` are sampled exactly by circulant embedding
of the increment autocovariance (FFT, ``O(N log N)`` per entry). Any other
set of times uses a symmetric eigendecomposition of the covariance matrix.
Each replica draws from its own ``SeedSequence(seed, spawn_key=(replica,))``
stream, filling entries in row-major upper-triangle order. Matrix entries are
rounded to the lattice ``2^-36 Z`` so that increments telescope exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import GridError, NumericError, ParameterError, SizeLimitError
from .kernel import _check_hurst, fbm_cov

__all__ = [
    "MatrixEnsembleConfig",
    "MatrixPath",
    "Grid2Fn",
    "Histogram",
    "DyadicInterpolant",
    "sample_fbm_path",
    "sample_matrix_path",
    "sample_matrix_at",
    "trace_state",
    "operator_norm",
    "spectral_histogram",
    "spectral_moment",
    "interpolate_dyadic",
    "dyadic_times",
    "replica_rng",
]

MAX_LEVEL = 14
MAX_GRID = (1 << MAX_LEVEL) + 1
DENSE_NORM_CAP = 256
_CLIP = -1e-10
_JITTER = 1e-12
# entry paths drawn per FFT batch (bounds peak memory)
_CHUNK = 256
_LATTICE = 2.0 ** 36
_LATTICE_MAX = 2.0 ** 16


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Generator for one replica; independent of how replicas are scheduled."""
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1),
                                spawn_key=(int(replica),))
    return np.random.Generator(np.random.PCG64(ss))


def dyadic_times(level: int) -> np.ndarray:
    if not 0 <= level <= MAX_LEVEL:
        raise ParameterError(f"level must lie in [0, {MAX_LEVEL}]")
    return np.arange((1 << level) + 1) / float(1 << level)


# --------------------------------------------------------------------------
# scalar sampling


def _uniform_step(times: np.ndarray) -> float | None:
    if times.size < 2 or times[0] != 0.0:
        return None
    h = times[1] - times[0]
    if h <= 0:
        return None
    if np.allclose(np.diff(times), h, rtol=0, atol=1e-12 * max(1.0, times[-1])):
        return float(h)
    return None


def _circulant_sqrt_eigs(H: float, N: int) -> np.ndarray:
    """``sqrt(lambda / 2N)`` for the circulant embedding of unit-step fGn."""
    k = np.arange(N + 1, dtype=float)
    e = 2.0 * H
    rho = 0.5 * (np.abs(k + 1) ** e + np.abs(k - 1) ** e - 2.0 * k ** e)
    c = np.concatenate([rho, rho[-2:0:-1]])
    lam = np.fft.fft(c).real
    if lam.min() < -1e-8 * lam.max():
        raise NumericError(
            f"circulant embedding not nonnegative (min eigenvalue {lam.min():.3e})")
    lam = np.clip(lam, 0.0, None)
    return np.sqrt(lam / c.size)


def _factor(H: float, times: np.ndarray) -> np.ndarray:
    """``L`` with ``L L^T = R`` on the positive times (eigendecomposition)."""
    R = fbm_cov(H, times[:, None], times[None, :])
    R = np.atleast_2d(R)
    w, V = np.linalg.eigh(R)
    if w.min() < _CLIP:
        w, V = np.linalg.eigh(R + _JITTER * np.eye(len(times)))
        if w.min() < _CLIP:
            raise NumericError(
                f"covariance not positive semidefinite after jitter "
                f"(smallest eigenvalue {w.min():.3e})")
    return V * np.sqrt(np.clip(w, 0.0, None))


class _Sampler:
    """Draws ``count`` scalar paths on a fixed time set from a generator."""

    def __init__(self, H: float, times: np.ndarray):
        self.H = H
        self.times = times
        self.h = _uniform_step(times)
        if self.h is not None:
            self.N = times.size - 1
            self.sq = _circulant_sqrt_eigs(H, self.N)
        else:
            self.pos = times > 0
            if not np.any(self.pos):
                self.L = None
            else:
                self.L = _factor(H, times[self.pos])

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.zeros((count, self.times.size))
        if self.h is not None:
            M = self.sq.size
            # real and imaginary parts are independent; use the real part
            for lo in range(0, count, _CHUNK):
                hi = min(count, lo + _CHUNK)
                z = rng.standard_normal((hi - lo, M)) \
                    + 1j * rng.standard_normal((hi - lo, M))
                inc = np.fft.fft(self.sq * z, axis=1).real[:, : self.N]
                out[lo:hi, 1:] = np.cumsum(inc, axis=1) * self.h ** self.H
        elif self.L is not None:
            z = rng.standard_normal((count, self.L.shape[1]))
            out[:, self.pos] = z @ self.L.T
        return out


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise ParameterError("empty time grid")
    if times.size > MAX_GRID:
        raise SizeLimitError(f"grid of {times.size} points exceeds {MAX_GRID}")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ParameterError("times must be nonnegative and increasing")
    return times


def sample_fbm_path(H: float, times: Sequence[float], seed: int,
                    count: int = 1, replica: int = 0) -> np.ndarray:
    """``count`` independent scalar paths on ``times``, shape ``(count, T)``."""
    H = _check_hurst(H)
    times = _check_times(times)
    if count < 1:
        raise ParameterError("count must be >= 1")
    return _Sampler(H, times).draw(replica_rng(seed, replica), count)


# --------------------------------------------------------------------------
# matrix paths


@dataclass(frozen=True)
class MatrixEnsembleConfig:
    d: int
    level: int
    H: float
    seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 2:
            raise ParameterError("d must be an integer >= 2")
        if not 0 <= self.level <= MAX_LEVEL:
            raise ParameterError(f"level must lie in [0, {MAX_LEVEL}]")
        _check_hurst(self.H)
        if self.replicas < 1:
            raise ParameterError("replicas must be >= 1")

    def as_dict(self) -> dict:
        return {"d": self.d, "level": self.level, "H": self.H,
                "seed": self.seed, "replicas": self.replicas}


class MatrixPath:
    """Immutable matrix-valued path: ``mats[k]`` is the value at ``times[k]``."""

    def __init__(self, times, mats, level: int | None = None, H=None,
                 copy: bool = True):
        times = np.array(times, dtype=float)
        mats = np.array(mats, dtype=float, copy=copy)
        if mats.ndim != 3 or mats.shape[0] != times.size or \
                mats.shape[1] != mats.shape[2]:
            raise ParameterError("mats must have shape (len(times), d, d)")
        times.flags.writeable = False
        mats.flags.writeable = False
        self.times = times
        self.mats = mats
        self.level = level
        self.H = H
        self._index = {float(t): k for k, t in enumerate(times)}

    @property
    def d(self) -> int:
        return self.mats.shape[1]

    def index(self, t: float) -> int:
        k = self._index.get(float(t))
        if k is None:
            if self.level is not None:
                x = t * (1 << self.level)
                r = round(x)
                if abs(x - r) < 1e-9 and 0 <= r < self.times.size:
                    return int(r)
            raise GridError(f"time {t} is not a grid point of this path")
        return k

    def at(self, t: float) -> np.ndarray:
        return self.mats[self.index(t)]

    def max_norm(self) -> float:
        """``max_t ||X_t||`` over grid times."""
        return float(max(operator_norm(m) for m in self.mats))

    def __len__(self):
        return self.times.size


def _quantize(x: np.ndarray) -> np.ndarray:
    # values on the lattice 2^-36 Z with |x| < 2^16 make every difference
    # and telescoping sum of path values exact in binary64
    if np.max(np.abs(x), initial=0.0) >= _LATTICE_MAX:
        raise NumericError("path value outside the fixed-point lattice range")
    return np.round(x * _LATTICE) / _LATTICE


def _assemble(entries: np.ndarray, d: int) -> np.ndarray:
    """Entry paths ``(E, T)`` in upper-triangle order -> ``(T, d, d)``."""
    T = entries.shape[1]
    iu = np.triu_indices(d)
    out = np.zeros((T, d, d))
    scale = np.where(iu[0] == iu[1], np.sqrt(2.0), 1.0) / np.sqrt(d)
    vals = _quantize((entries * scale[:, None]).T)
    out[:, iu[0], iu[1]] = vals
    out[:, iu[1], iu[0]] = vals
    return out


def sample_matrix_at(d: int, H: float, times, seed: int,
                     replica: int = 0) -> MatrixPath:
    """Matrix process at an arbitrary increasing set of times."""
    H = _check_hurst(H)
    if d < 2:
        raise ParameterError("d must be >= 2")
    times = _check_times(times)
    E = d * (d + 1) // 2
    if E * times.size > 2 ** 28:
        raise SizeLimitError("matrix path too large for memory")
    entries = _Sampler(H, times).draw(replica_rng(seed, replica), E)
    level = None
    h = _uniform_step(times)
    if h is not None and times[-1] == 1.0:
        lv = int(round(np.log2(1.0 / h)))
        if 2.0 ** -lv == h:
            level = lv
    return MatrixPath(times, _assemble(entries, d), level=level, H=H,
                      copy=False)


def sample_matrix_path(cfg: MatrixEnsembleConfig,
                       replica: int = 0) -> MatrixPath:
    """Matrix process on the dyadic grid ``i / 2^level`` of ``[0, 1]``."""
    if not 0 <= replica < cfg.replicas:
        raise ParameterError(f"replica must lie in [0, {cfg.replicas})")
    return sample_matrix_at(cfg.d, cfg.H, dyadic_times(cfg.level), cfg.seed,
                            replica)


class Grid2Fn:
    """Two-parameter matrix function ``(s, t) -> A_st`` with ``A_tt = 0``."""

    def __init__(self, fn: Callable[[float, float], np.ndarray],
                 level: int | None = None, d: int | None = None):
        self.fn = fn
        self.level = level
        self.d = d

    def __call__(self, s: float, t: float) -> np.ndarray:
        if s == t and self.d is not None:
            return np.zeros((self.d, self.d))
        return self.fn(s, t)


# --------------------------------------------------------------------------
# measurements


def trace_state(A) -> float:
    """Normalized trace ``(1/d) sum_i A_ii``."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError("trace_state needs a square matrix")
    return float(np.trace(A)) / A.shape[0]


def operator_norm(A, tol: float = 1e-10, maxiter: int = 10_000) -> float:
    """Largest absolute eigenvalue of a symmetric matrix.

    Dense eigensolver up to ``d = 256``; Lanczos (ARPACK) above.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError("operator_norm needs a square matrix")
    d = A.shape[0]
    if d <= DENSE_NORM_CAP:
        w = np.linalg.eigvalsh(A)
        return float(max(abs(w[0]), abs(w[-1])))
    v0 = np.ones(d) / np.sqrt(d)
    try:
        w = eigsh(A, k=1, which="LM", tol=tol, maxiter=maxiter, v0=v0,
                  return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise NumericError(
            f"operator norm iteration did not converge in {maxiter} "
            f"iterations") from exc
    return float(abs(w[0]))


class Histogram(NamedTuple):
    bin_left: np.ndarray
    bin_right: np.ndarray
    density: np.ndarray


def spectral_histogram(A, bins: int = 50, range=None) -> Histogram:
    """Eigenvalue histogram normalized to a probability density."""
    if bins < 10:
        raise ParameterError("bins must be >= 10")
    w = np.linalg.eigvalsh(np.asarray(A, dtype=float))
    dens, edges = np.histogram(w, bins=bins, range=range, density=True)
    return Histogram(edges[:-1], edges[1:], dens)


def spectral_moment(A, k: int) -> float:
    """``trace_state(A^k)`` computed from the eigenvalues."""
    w = np.linalg.eigvalsh(np.asarray(A, dtype=float))
    return float(np.mean(w ** k))


class DyadicInterpolant:
    """Piecewise-linear interpolation of a path along the level-``n`` grid."""

    def __init__(self, path: MatrixPath, n: int):
        if path.level is None:
            raise GridError("interpolation needs a dyadic path")
        if not 0 <= n <= path.level:
            raise ParameterError(
                f"interpolation level {n} exceeds the path level {path.level}")
        self.path = path
        self.n = n
        self.stride = 1 << (path.level - n)
        self.nodes = path.mats[:: self.stride]

    @property
    def d(self) -> int:
        return self.path.d

    def __call__(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= 1.0:
            raise ParameterError("t must lie in [0, 1]")
        N = 1 << self.n
        x = t * N
        i = int(np.floor(x))
        frac = x - i
        if frac == 0.0:
            return self.nodes[i].copy()
        return self.nodes[i] + frac * (self.nodes[i + 1] - self.nodes[i])


def interpolate_dyadic(path: MatrixPath, n: int) -> DyadicInterpolant:
    """``X^(n)_t = X_{t_i} + 2^n (t - t_i)(X_{t_i+1} - X_{t_i})``."""
    return DyadicInterpolant(path, n)
