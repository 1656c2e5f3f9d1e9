import itertools

import pytest
from hypothesis import given, strategies as st

from ncfbm.combinat import (Pairing, catalan, crossing_number,
                            double_factorial, enumerate_noncrossing,
                            enumerate_pairings, format_pairing,
                            visit_pairings)
from ncfbm.errors import ParameterError, SizeLimitError


def brute_pairings(m):
    """All perfect matchings of 1..2m via permutations (tiny m only)."""
    out = set()
    for perm in itertools.permutations(range(1, 2 * m + 1)):
        blocks = [tuple(sorted(perm[2 * i:2 * i + 2])) for i in range(m)]
        out.add(tuple(sorted(blocks)))
    return out


@pytest.mark.parametrize("m, count", [(1, 1), (2, 3), (3, 15), (4, 105)])
def test_all_pairings_counts(m, count):
    ps = enumerate_pairings(m)
    assert len(ps) == count == double_factorial(2 * m - 1)
    assert len({p.blocks for p in ps}) == count


def test_m1_single_pairing():
    assert [p.blocks for p in enumerate_pairings(1)] == [((1, 2),)]


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_all_pairings_match_brute_force(m):
    assert {p.blocks for p in enumerate_pairings(m)} == brute_pairings(m)


def test_enumeration_order_is_deterministic():
    a = [p.blocks for p in enumerate_pairings(4)]
    b = [p.blocks for p in enumerate_pairings(4)]
    assert a == b


def test_noncrossing_m2():
    got = {p.blocks for p in enumerate_noncrossing(2)}
    assert got == {((1, 2), (3, 4)), ((1, 4), (2, 3))}


@pytest.mark.parametrize("m, count", [(3, 5), (5, 42), (7, 429)])
def test_noncrossing_counts(m, count):
    ps = enumerate_noncrossing(m)
    assert len(ps) == count == catalan(m)
    assert all(crossing_number(p) == 0 for p in ps)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_noncrossing_is_the_zero_crossing_subset(m):
    nc = {p.blocks for p in enumerate_noncrossing(m)}
    zero = {p.blocks for p in enumerate_pairings(m) if crossing_number(p) == 0}
    assert nc == zero


@pytest.mark.parametrize("blocks, cr", [
    (((1, 2), (3, 4)), 0),
    (((1, 3), (2, 4)), 1),
    (((1, 4), (2, 5), (3, 6)), 3),
    (((1, 6), (2, 5), (3, 4)), 0),
])
def test_crossing_number(blocks, cr):
    assert crossing_number(Pairing(blocks)) == cr


def test_crossing_distribution_m3():
    # Touchard-Riordan: q-count of matchings of 6 points is 5 + 6q + 3q^2 + q^3
    hist = [0] * 4
    for p in enumerate_pairings(3):
        hist[crossing_number(p)] += 1
    assert hist == [5, 6, 3, 1]


@pytest.mark.parametrize("m, c", [(0, 1), (1, 1), (3, 5), (7, 429),
                                  (10, 16796), (30, 3814986502092304)])
def test_catalan_values(m, c):
    assert catalan(m) == c


def test_catalan_recurrence():
    for m in range(0, 20):
        assert catalan(m + 1) == sum(catalan(i) * catalan(m - i)
                                     for i in range(m + 1))


def test_catalan_root_increases_to_two():
    vals = [catalan(m) ** (1 / (2 * m)) for m in (5, 10, 15, 20)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(v <= 2 for v in vals)
    # 42^(1/10) = 1.453; the window (1.5, 2] only holds from m = 10 on
    assert vals[0] == pytest.approx(1.4532, abs=1e-4)
    assert all(1.5 < v for v in vals[1:])


def test_caps():
    with pytest.raises(SizeLimitError, match="cap"):
        catalan(31)
    with pytest.raises(SizeLimitError, match="34,459,425"):
        enumerate_pairings(9)
    with pytest.raises(SizeLimitError):
        enumerate_noncrossing(13)
    with pytest.raises(ParameterError):
        catalan(-1)


def test_visitor_streams_beyond_list_cap():
    n = sum(1 for _ in visit_pairings(9, noncrossing=True))
    assert n == catalan(9)


def test_pairing_validation_and_format():
    p = Pairing.from_blocks([(4, 1), (3, 2)])
    assert p.blocks == ((1, 4), (2, 3))
    assert format_pairing(p) == str(p) == "(1,4)(2,3)"
    with pytest.raises(ParameterError):
        Pairing(((1, 3), (2, 3)))
    with pytest.raises(ParameterError):
        Pairing(((2, 1),))


@given(st.integers(min_value=1, max_value=5))
def test_every_pairing_is_a_perfect_matching(m):
    for p in enumerate_pairings(m):
        flat = sorted(x for b in p.blocks for x in b)
        assert flat == list(range(1, 2 * m + 1))
        assert 0 <= crossing_number(p) <= m * (m - 1) // 2
