"""Second moment of the dyadic Levy-area correction M(n).

Compares the one-dimensional closed form with the four-letter Wick oracle,
then shows the two regimes: growth like 2^{n(1-4H)} for H <= 1/4 (with the
explicit lower bound) and geometric decay above.

Run: python3 demos/levy_gap.py
"""

import math

from ncfbm.levy_exact import (gamma_H, lower_bound_constant, m_n_closed,
                              m_n_lower_bound, m_n_wick_oracle)

print("closed form vs Wick oracle")
for H in (0.1, 0.25, 0.4):
    for n in (0, 4, 8):
        c, o = m_n_closed(H, n).value, m_n_wick_oracle(H, n).value
        print(f"  H={H:.2f} n={n}: {c:.15e}  {o:.15e}  rel {abs(c - o) / c:.1e}")

print("\nGamma_H(0) and the lower-bound constant")
for H in (0.1, 0.2, 0.25):
    print(f"  H={H}: Gamma_H(0)={gamma_H(H, 0):.6f}  "
          f"c={lower_bound_constant(H):.6f}")

print("\nlog2 M(n) per level (target slope 1-4H)")
for H in (0.1, 0.2, 0.25, 0.3, 0.4):
    vals = [m_n_closed(H, n).value for n in range(4, 13)]
    slope = (math.log2(vals[-1]) - math.log2(vals[0])) / 8
    lb_ok = all(m_n_closed(H, n).value >= m_n_lower_bound(H, n)
                for n in range(13)) if H <= 0.25 else None
    print(f"  H={H:.2f}: slope {slope:+.4f} vs {1 - 4 * H:+.2f}"
          + ("" if lb_ok is None else f"; lower bound holds: {lb_ok}"))
