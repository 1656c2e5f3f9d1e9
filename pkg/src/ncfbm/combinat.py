"""Pairings of ``{1, ..., 2m}``: enumeration, crossings and Catalan numbers.

Pairings are generated by always matching the smallest free index with each
larger free index in increasing order. This yields canonical blocks (``p < q``,
sorted by first element) in a deterministic order. The non-crossing variant
prunes any branch whose new block would interleave an existing one.

Everything here works with exact integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Iterator

from .errors import ParameterError, SizeLimitError

__all__ = [
    "Pairing",
    "catalan",
    "double_factorial",
    "crossing_number",
    "enumerate_pairings",
    "enumerate_noncrossing",
    "visit_pairings",
    "format_pairing",
    "LIST_CAP",
    "VISITOR_CAP",
    "NONCROSSING_CAP",
]

LIST_CAP = 8
VISITOR_CAP = 10
NONCROSSING_CAP = 12
CATALAN_CAP = 30


@dataclass(frozen=True)
class Pairing:
    """A perfect matching of ``{1, ..., 2m}`` stored in canonical form."""

    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = []
        for p, q in self.blocks:
            if not p < q:
                raise ParameterError(f"block ({p},{q}) is not increasing")
            seen.extend((p, q))
        n = len(seen)
        if sorted(seen) != list(range(1, n + 1)):
            raise ParameterError("blocks must cover 1..2m exactly once")
        firsts = [p for p, _ in self.blocks]
        if firsts != sorted(firsts):
            raise ParameterError("blocks must be sorted by first element")

    @classmethod
    def from_blocks(cls, blocks) -> "Pairing":
        """Canonicalize an arbitrary iterable of 2-element blocks."""
        canon = sorted(tuple(sorted(b)) for b in blocks)
        return cls(tuple(canon))

    @classmethod
    def _trusted(cls, blocks) -> "Pairing":
        obj = object.__new__(cls)
        object.__setattr__(obj, "blocks", blocks)
        return obj

    @property
    def m(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return format_pairing(self)


def format_pairing(p: Pairing) -> str:
    """Render as ``(1,4)(2,3)``."""
    return "".join(f"({a},{b})" for a, b in p.blocks)


def double_factorial(n: int) -> int:
    """``n!! = n (n-2) (n-4) ...`` with ``(-1)!! = 0!! = 1``."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def catalan(m: int) -> int:
    """Catalan number ``C_m = (2m)! / (m! (m+1)!)``.

    Restricted to ``m <= 30`` so that results fit a signed 64-bit integer.
    """
    if m < 0:
        raise ParameterError(f"catalan needs m >= 0, got {m}")
    if m > CATALAN_CAP:
        raise SizeLimitError(
            f"catalan({m}) exceeds the 64-bit cap m <= {CATALAN_CAP}")
    return comb(2 * m, m) // (m + 1)


def crossing_number(p: Pairing) -> int:
    """Number of block pairs ``{p1,q1}, {p2,q2}`` with ``p1 < p2 < q1 < q2``."""
    blocks = p.blocks
    count = 0
    for a in range(len(blocks)):
        p1, q1 = blocks[a]
        for b in range(a + 1, len(blocks)):
            p2, q2 = blocks[b]
            if p1 < p2 < q1 < q2 or p2 < p1 < q2 < q1:
                count += 1
    return count


def _check_m(m: int, cap: int, count: Callable[[int], int], what: str):
    if not isinstance(m, int) or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    if m > cap:
        raise SizeLimitError(
            f"{what} for m={m} would produce {count(m):,} pairings; "
            f"cap is m <= {cap}")


def _walk(m: int, noncrossing: bool) -> Iterator[tuple[tuple[int, int], ...]]:
    n = 2 * m
    partner = [0] * (n + 1)
    blocks: list[tuple[int, int]] = []

    def rec(free: list[int]):
        if not free:
            yield tuple(blocks)
            return
        p = free[0]
        rest = free[1:]
        for idx, q in enumerate(rest):
            if noncrossing:
                # every earlier block starts below p, so it crosses (p, q)
                # iff its other end lies strictly inside (p, q)
                if any(partner[j] for j in range(p + 1, q)):
                    continue
                # free slots inside (p, q) must pair among themselves
                if idx % 2:
                    continue
            partner[p] = q
            partner[q] = p
            blocks.append((p, q))
            yield from rec(rest[:idx] + rest[idx + 1:])
            blocks.pop()
            partner[p] = 0
            partner[q] = 0

    yield from rec(list(range(1, n + 1)))


def visit_pairings(m: int, noncrossing: bool = False) -> Iterator[Pairing]:
    """Stream pairings of ``{1..2m}`` one at a time (``m <= 10``).

    The generator is not thread-safe; drive each traversal from one thread.
    """
    if noncrossing:
        _check_m(m, NONCROSSING_CAP, catalan, "non-crossing enumeration")
    else:
        _check_m(m, VISITOR_CAP, lambda k: double_factorial(2 * k - 1),
                 "pairing visitor")
    for blocks in _walk(m, noncrossing):
        yield Pairing._trusted(blocks)


def enumerate_pairings(m: int) -> list[Pairing]:
    """All ``(2m-1)!!`` pairings of ``{1..2m}`` (list API, ``m <= 8``)."""
    _check_m(m, LIST_CAP, lambda k: double_factorial(2 * k - 1),
             "pairing enumeration")
    return [Pairing._trusted(b) for b in _walk(m, False)]


def enumerate_noncrossing(m: int) -> list[Pairing]:
    """The ``catalan(m)`` non-crossing pairings of ``{1..2m}`` (``m <= 12``)."""
    _check_m(m, NONCROSSING_CAP, catalan, "non-crossing enumeration")
    return [Pairing._trusted(b) for b in _walk(m, True)]
