"""Traces of words in a fractional semicircular family.

Walks from pairings to moments: counts pairings, evaluates a few words by
both the dynamic-programming route and the literal pairing sum, shows the
Riemann-sum trace that has no limit below H = 1/2, and prints the slow
moment-growth approach to the operator norm of an increment.

Run: python3 demos/free_moments.py
"""

from ncfbm.combinat import catalan, enumerate_noncrossing, enumerate_pairings
from ncfbm.kernel import FBMKernel, Letter
from ncfbm.moments import (Element, Word, element_moment, norm_estimate,
                           pairing_weight_sum, q_wick_moment,
                           richardson_limit, wick_moment)

print("pairings of 6 points:", len(enumerate_pairings(3)),
      "of which non-crossing:", len(enumerate_noncrossing(3)))
print("non-crossing pairings:", ", ".join(str(p) for p in
                                          enumerate_noncrossing(3)))

H = 0.3
K = FBMKernel(H)
a, b = Letter.increment(0.0, 0.5), Letter.increment(0.5, 1.0)
w = Word.of(a, b, a, b, a, a)
print(f"\nH={H}: phi(a b a b a a) with a, b adjacent half-increments")
print("  interval recursion :", wick_moment(K, w))
print("  literal pairing sum:", wick_moment(K, w, method="enumerate"))
for q in (-0.5, 0.0, 0.5):
    print(f"  q={q:+.1f} deformation:", q_wick_moment(K, w, q))

print("\nphi(sum_i X_{i/n} dX_i) against 1/2 (1 - n^{1-2H}):")
for n in (2, 16, 128):
    A = Element([(1.0, Word.of(Letter.point(i / n),
                               Letter.increment(i / n, (i + 1) / n)))
                 for i in range(n)])
    print(f"  n={n:4d}: {element_moment(K, A):+.12f}   "
          f"{0.5 * (1 - n ** (1 - 2 * H)):+.12f}")

print("\nphi((dX dX*)^r)^(1/2r) for dX = X_1 - X_0 (operator norm is 2):")
seq = norm_estimate(K, Letter.increment(0.0, 1.0), 10)
for r, v in enumerate(seq, 1):
    print(f"  r={r:2d}: {v:.4f}   catalan(r)^(1/2r) = "
          f"{catalan(r) ** (1 / (2 * r)):.4f}")
print(f"  Richardson extrapolation of the last two terms: "
      f"{richardson_limit(seq):.4f}")
print("  q=0.5 weight sums, r=8:", pairing_weight_sum(8, 0.5) ** (1 / 16))
