"""Exact traces of words in a semicircular (or q-Gaussian) family.

The trace of a word ``w_1 ... w_r`` of letters is a sum over pairings of
products of letter covariances. Two evaluation routes are provided:

* ``method="dp"`` (default): an interval recursion over the position paired
  with the first letter (non-crossing case) or a memoized recursion over the
  set of still-unpaired positions that tracks crossings (q case);
* ``method="enumerate"``: the literal sum over the pairings listed by
  :mod:`ncfbm.combinat`, kept as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi, sqrt
from typing import Iterable, Sequence, Union

import numpy as np

from .combinat import (catalan, crossing_number, enumerate_noncrossing,
                       enumerate_pairings)
from .errors import ParameterError, SizeLimitError
from .kernel import CovKernel, Letter, cov_matrix

__all__ = [
    "Word",
    "Element",
    "SemicircleLaw",
    "WICK_CAP",
    "Q_WICK_CAP",
    "wick_moment",
    "q_wick_moment",
    "element_moment",
    "norm_estimate",
    "richardson_limit",
    "semicircle_density",
    "semicircle_moment",
    "pairing_weight_sum",
]

WICK_CAP = 20
Q_WICK_CAP = 16
EXPANSION_CAP = 200_000


@dataclass(frozen=True)
class Word:
    """An ordered product of letters."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    @classmethod
    def of(cls, *letters: Letter) -> "Word":
        return cls(tuple(letters))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def adjoint(self) -> "Word":
        # letters are real combinations of self-adjoint variables
        return Word(self.letters[::-1])

    def __str__(self):
        return ";".join(str(a) for a in self.letters)


class Element:
    """A real linear combination of words, ``sum_j c_j w_j``."""

    def __init__(self, terms: Iterable[tuple[float, Word]] = ()):
        self.terms = [(float(c), w) for c, w in terms]

    @classmethod
    def from_letter(cls, a: Letter) -> "Element":
        return cls([(1.0, Word.of(a))])

    @classmethod
    def from_word(cls, w: Word, coef: float = 1.0) -> "Element":
        return cls([(coef, w)])

    def __add__(self, other: "Element") -> "Element":
        return Element(self.terms + other.terms)

    def __mul__(self, other):
        if isinstance(other, Element):
            return Element([(a * b, u + v) for a, u in self.terms
                            for b, v in other.terms])
        return Element([(other * c, w) for c, w in self.terms])

    __rmul__ = __mul__

    def adjoint(self) -> "Element":
        return Element([(c, w.adjoint()) for c, w in self.terms])

    def __len__(self):
        return len(self.terms)


# --------------------------------------------------------------------------
# pairing sums on a covariance matrix


def _nc_sum(C: np.ndarray) -> float:
    """Sum over non-crossing pairings of ``prod C[p, q]`` (interval DP)."""
    n = C.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    # f[i, j] = value on positions i..j-1 (half-open), f[i, i] = 1
    f = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        f[i, i] = 1.0
    for length in range(2, n + 1, 2):
        for i in range(0, n - length + 1):
            j = i + length
            acc = 0.0
            for k in range(i + 1, j, 2):
                acc += C[i, k] * f[i + 1, k] * f[k + 1, j]
            f[i, j] = acc
    return float(f[0, n])


def _q_sum(C: np.ndarray, q: float) -> float:
    """Sum over all pairings of ``q^{crossings} prod C[p, q]``.

    The lowest free position is paired first; a new block ``(p, r)`` crosses
    exactly the earlier blocks with one end inside ``(p, r)``, i.e. the
    already-paired positions in that gap, which the free-set mask determines.
    """
    n = C.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def rec(mask: int) -> float:
        if mask == 0:
            return 1.0
        p = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << p)
        acc = 0.0
        r_mask = rest
        while r_mask:
            r = (r_mask & -r_mask).bit_length() - 1
            r_mask &= r_mask - 1
            gap = ((1 << r) - 1) & ~((1 << (p + 1)) - 1)
            used = bin(gap & ~mask & full).count("1")
            weight = 1.0 if used == 0 else q ** used
            if weight != 0.0:
                acc += weight * C[p, r] * rec(rest & ~(1 << r))
        return acc

    return float(rec(full))


def _kappa(C: np.ndarray, blocks) -> float:
    out = 1.0
    for p, q in blocks:
        out *= C[p - 1, q - 1]
    return out


def _word_cov(K: CovKernel, w: Word) -> np.ndarray:
    return cov_matrix(K, w.letters)


def wick_moment(K: CovKernel, w: Word, method: str = "dp",
                cap: int = WICK_CAP) -> float:
    """Trace of the word ``w`` in a semicircular family with kernel ``K``."""
    r = len(w)
    if r > cap:
        raise SizeLimitError(
            f"word of length {r} exceeds the non-crossing cap {cap} "
            f"({catalan(r // 2):,} pairings)")
    if r == 0:
        return 1.0
    if r % 2:
        return 0.0
    C = _word_cov(K, w)
    if method == "dp":
        return _nc_sum(C)
    if method == "enumerate":
        return float(sum(_kappa(C, p.blocks)
                         for p in enumerate_noncrossing(r // 2)))
    raise ParameterError(f"unknown method {method!r}")


def q_wick_moment(K: CovKernel, w: Word, q: float, method: str = "dp",
                  cap: int = Q_WICK_CAP) -> float:
    """Trace of ``w`` in a q-Gaussian family (all pairings, ``q^{Cr}``)."""
    if not -1.0 < q < 1.0:
        raise ParameterError(f"q must lie in (-1, 1), got {q}")
    r = len(w)
    if r > cap:
        raise SizeLimitError(
            f"word of length {r} exceeds the all-pairings cap {cap}")
    if r == 0:
        return 1.0
    if r % 2:
        return 0.0
    C = _word_cov(K, w)
    if method == "dp":
        return _q_sum(C, q)
    if method == "enumerate":
        total = 0.0
        for p in enumerate_pairings(r // 2):
            cr = crossing_number(p)
            total += (q ** cr if cr else 1.0) * _kappa(C, p.blocks)
        return total
    raise ParameterError(f"unknown method {method!r}")


def pairing_weight_sum(m: int, q: float) -> float:
    """``sum over pairings of {1..2m} of q^{Cr}`` (unit covariances)."""
    return _q_sum(np.ones((2 * m, 2 * m)), q)


def element_moment(K: CovKernel, A: Union[Element, Word, Letter],
                   q: float | None = None) -> float:
    """Trace of a linear combination of words (multilinear expansion)."""
    A = _as_element(A)
    total = 0.0
    cache: dict[Word, float] = {}
    for c, w in A.terms:
        if w not in cache:
            cache[w] = (wick_moment(K, w) if q is None
                        else q_wick_moment(K, w, q))
        total += c * cache[w]
    return total


def _as_element(A) -> Element:
    if isinstance(A, Element):
        return A
    if isinstance(A, Word):
        return Element.from_word(A)
    if isinstance(A, Letter):
        return Element.from_letter(A)
    raise ParameterError(f"cannot interpret {type(A).__name__} as an element")


def norm_estimate(K: CovKernel, A, r_max: int,
                  cap: int = WICK_CAP) -> np.ndarray:
    """Moment-growth estimates ``phi((A A*)^r)^{1/(2r)}`` for ``r = 1..r_max``.

    The limit ``r -> inf`` is the operator norm of ``A``. Convergence is slow
    (for a single letter the r-th value is ``catalan(r)^{1/2r}`` times the
    standard deviation), so the whole sequence is returned; see
    :func:`richardson_limit` for a heuristic extrapolation.
    """
    A = _as_element(A)
    if r_max < 1:
        raise ParameterError("r_max must be >= 1")
    longest = max((len(w) for _, w in A.terms), default=0)
    if 2 * r_max * longest > cap:
        raise SizeLimitError(
            f"2*r_max*|w| = {2 * r_max * longest} exceeds the cap {cap}")
    AA = A * A.adjoint()
    if len(AA) ** r_max > EXPANSION_CAP:
        raise SizeLimitError(
            f"expanding (A A*)^{r_max} gives {len(AA) ** r_max:,} words")
    out = np.empty(r_max)
    power = AA
    for r in range(1, r_max + 1):
        if r > 1:
            power = power * AA
        val = element_moment(K, power)
        out[r - 1] = max(val, 0.0) ** (1.0 / (2 * r))
    return out


def richardson_limit(seq: Sequence[float]) -> float:
    """First-order Richardson extrapolation in ``1/r`` of the last two terms.

    Heuristic: the moment-growth sequence also carries ``log(r)/r`` terms.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.size < 2:
        raise ParameterError("need at least two terms")
    r = seq.size
    return float(r * seq[-1] - (r - 1) * seq[-2])


@dataclass(frozen=True)
class SemicircleLaw:
    """Centered semicircle distribution of variance ``variance``."""

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ParameterError("variance must be positive")

    @property
    def radius(self) -> float:
        return 2.0 * sqrt(self.variance)


def semicircle_density(law: SemicircleLaw, x):
    """``sqrt(4 s^2 - x^2) / (2 pi s^2)`` on ``|x| <= 2 s``, else 0."""
    s2 = law.variance
    x = np.asarray(x, dtype=float)
    inside = np.clip(4.0 * s2 - x * x, 0.0, None)
    out = np.sqrt(inside) / (2.0 * pi * s2)
    return float(out) if out.ndim == 0 else out


def semicircle_moment(law: SemicircleLaw, k: int) -> float:
    """``k``-th moment: 0 for odd ``k``, ``catalan(k/2) sigma^k`` otherwise."""
    if k < 0:
        raise ParameterError("k must be >= 0")
    if k % 2:
        return 0.0
    return catalan(k // 2) * law.variance ** (k // 2)
