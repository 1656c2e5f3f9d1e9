"""Polynomial calculus on matrices.

``P(U) = sum_k a_k U^k``; its tensor derivative is
``dP(U) = sum_k a_k sum_{i<k} U^i (x) U^{k-1-i}`` and acts on a matrix ``Y``
through the contraction ``(A (x) B) # Y = A Y B``. Tensors are kept as lists
of ``(left, right)`` factor pairs; no ``d^2 x d^2`` Kronecker product is
ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "Poly",
    "TensorPoly",
    "TensorValue",
    "MAX_DEGREE",
    "eval_poly",
    "matrix_powers",
    "tensor_derivative",
    "sharp",
    "id_phi_id",
    "commutator",
    "taylor_defect",
]

MAX_DEGREE = 16


def _trace_state(A) -> float:
    return float(np.trace(A)) / A.shape[0]


def _spec_norm(A) -> float:
    # symmetric inputs in practice; the SVD route also covers the rest
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


@dataclass(frozen=True)
class Poly:
    """Real polynomial ``a_0 + a_1 x + ... + a_p x^p`` (trailing zeros trimmed)."""

    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        c = [float(a) for a in self.coeffs]
        while c and c[-1] == 0.0:
            c.pop()
        if len(c) - 1 > MAX_DEGREE:
            raise ParameterError(f"degree {len(c) - 1} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def parse(cls, text: str) -> "Poly":
        """Comma-separated coefficients ``a_0,a_1,...``."""
        try:
            return cls(tuple(float(x) for x in text.split(",") if x.strip()))
        except ValueError as exc:
            raise ParameterError(f"bad polynomial coefficients {text!r}") from exc

    @classmethod
    def monomial(cls, k: int, c: float = 1.0) -> "Poly":
        return cls((0.0,) * k + (c,))

    @property
    def degree(self) -> int:
        """Degree; ``-1`` for the zero polynomial."""
        return len(self.coeffs) - 1

    def derivative(self) -> "Poly":
        return Poly(tuple(k * a for k, a in enumerate(self.coeffs) if k))

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0.0,) * (n - len(self.coeffs))
        b = other.coeffs + (0.0,) * (n - len(other.coeffs))
        return Poly(tuple(x + y for x, y in zip(a, b)))

    def __call__(self, x):
        return sum(a * x ** k for k, a in enumerate(self.coeffs)) \
            if self.coeffs else 0.0

    def __str__(self):
        return ",".join(f"{a:g}" for a in self.coeffs) or "0"


@dataclass(frozen=True)
class TensorPoly:
    """``sum c U^a (x) U^b``, canonical: merged by ``(a, b)``, sorted, no zeros."""

    terms: tuple[tuple[float, int, int], ...] = ()

    def __post_init__(self):
        merged: dict[tuple[int, int], float] = {}
        for c, a, b in self.terms:
            if a < 0 or b < 0:
                raise ParameterError("tensor powers must be >= 0")
            merged[(a, b)] = merged.get((a, b), 0.0) + float(c)
        canon = tuple((c, a, b) for (a, b), c in sorted(merged.items())
                      if c != 0.0)
        object.__setattr__(self, "terms", canon)

    def __add__(self, other: "TensorPoly") -> "TensorPoly":
        return TensorPoly(self.terms + other.terms)

    def at(self, U, powers: Sequence[np.ndarray] | None = None) -> "TensorValue":
        """Evaluate at the matrix ``U``."""
        U = np.asarray(U, dtype=float)
        top = max((max(a, b) for _, a, b in self.terms), default=0)
        if powers is None:
            powers = matrix_powers(U, top)
        return TensorValue([(c * powers[a], powers[b])
                            for c, a, b in self.terms])


class TensorValue:
    """``sum_i L_i (x) R_i`` as an explicit list of matrix pairs."""

    def __init__(self, terms: Iterable[tuple[np.ndarray, np.ndarray]] = ()):
        self.terms = [(np.asarray(L, dtype=float), np.asarray(R, dtype=float))
                      for L, R in terms]
        shapes = {x.shape for pair in self.terms for x in pair}
        if len(shapes) > 1:
            raise ParameterError(f"inconsistent factor shapes {sorted(shapes)}")

    @property
    def d(self) -> int | None:
        return self.terms[0][0].shape[0] if self.terms else None

    def __len__(self):
        return len(self.terms)


def matrix_powers(U, p: int) -> list[np.ndarray]:
    """``[I, U, U^2, ..., U^p]``."""
    U = np.asarray(U, dtype=float)
    out = [np.eye(U.shape[0])]
    for _ in range(p):
        out.append(out[-1] @ U)
    return out


def eval_poly(P: Poly, A) -> np.ndarray:
    """``sum_k a_k A^k`` by Horner's rule; ``A`` may be a stack ``(..., d, d)``."""
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ParameterError("eval_poly needs square matrices")
    eye = np.broadcast_to(np.eye(A.shape[-1]), A.shape)
    if not P.coeffs:
        return np.zeros_like(A)
    out = P.coeffs[-1] * eye
    for a in reversed(P.coeffs[:-1]):
        out = out @ A
        if a != 0.0:
            out = out + a * eye
    return np.array(out)


def tensor_derivative(P: Poly) -> TensorPoly:
    """``sum_k a_k sum_{i=0}^{k-1} U^i (x) U^{k-1-i}``."""
    return TensorPoly(tuple((a, i, k - 1 - i)
                            for k, a in enumerate(P.coeffs) if k
                            for i in range(k)))


def sharp(T: TensorValue, Y) -> np.ndarray:
    """``(sum L_i (x) R_i) # Y = sum L_i Y R_i``."""
    Y = np.asarray(Y, dtype=float)
    out = np.zeros_like(Y)
    for L, R in T.terms:
        if L.shape[1] != Y.shape[0] or Y.shape[1] != R.shape[0]:
            raise ParameterError(
                f"dimension mismatch: {L.shape} # {Y.shape} # {R.shape}")
        out += L @ Y @ R
    return out


def id_phi_id(terms, V=None, W=None) -> np.ndarray:
    """``U (x) V (x) W -> phi(V) U W``, extended linearly over term lists.

    Call as ``id_phi_id(U, V, W)`` or ``id_phi_id([(U, V, W), ...])``.
    """
    if V is not None or W is not None:
        terms = [(terms, V, W)]
    out = None
    for U, Vm, Wm in terms:
        U, Vm, Wm = (np.asarray(x, dtype=float) for x in (U, Vm, Wm))
        if not (U.shape == Vm.shape == Wm.shape):
            raise ParameterError("id_phi_id factors must share one shape")
        val = _trace_state(Vm) * (U @ Wm)
        out = val if out is None else out + val
    if out is None:
        raise ParameterError("id_phi_id needs at least one term")
    return out


def commutator(A, B) -> np.ndarray:
    """``A B - B A``."""
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ParameterError("commutator needs matrices of one shape")
    return A @ B - B @ A


def taylor_defect(P: Poly, U, V) -> tuple[float, float]:
    """Normalized first- and second-order Taylor remainders of ``P``.

    Returns
    -------
    first_order : float
        ``||P(V) - P(U)|| / ((1 + ||U|| + ||V||)^{p-1} ||V - U||)``
    second_order : float
        ``||P(V) - P(U) - dP(U) # (V - U)|| /
        ((1 + ||U|| + ||V||)^{p-2} ||V - U||^2)``

    Both are 0 when ``V == U``. Norms are spectral norms.
    """
    U, V = np.asarray(U, dtype=float), np.asarray(V, dtype=float)
    if U.shape != V.shape:
        raise ParameterError("U and V must share one shape")
    D = V - U
    nd = _spec_norm(D)
    if nd == 0.0:
        return 0.0, 0.0
    p = max(P.degree, 0)
    base = 1.0 + _spec_norm(U) + _spec_norm(V)
    PV, PU = eval_poly(P, V), eval_poly(P, U)
    first = _spec_norm(PV - PU) / (base ** (p - 1) * nd)
    rem = PV - PU - sharp(tensor_derivative(P).at(U), D)
    second = _spec_norm(rem) / (base ** (p - 2) * nd * nd)
    return first, second
