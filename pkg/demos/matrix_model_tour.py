"""Symmetric matrices with fractional Brownian entries.

Samples a path, compares normalized traces with exact free moments, checks
the semicircle moments of M_1 at d=512, and evaluates the Levy-area
identities that hold exactly for the piecewise-linear interpolant.

Run: python3 demos/matrix_model_tour.py
"""

import numpy as np

from ncfbm.combinat import catalan
from ncfbm.kernel import FBMKernel, Letter
from ncfbm.matrix_model import (MatrixEnsembleConfig, operator_norm,
                                sample_matrix_at, sample_matrix_path,
                                spectral_moment, trace_state)
from ncfbm.moments import Word, wick_moment
from ncfbm.rough import (LevyAreaEval, chen_defect,
                         commutator_identity_defect, level_diff, scale)

H, d = 0.3, 128
K = FBMKernel(H)
a, b = Letter.increment(0.0, 0.5), Letter.increment(0.25, 1.0)
word = Word.of(a, b, a, b)
vals = []
for r in range(40):
    p = sample_matrix_at(d, H, [0.0, 0.25, 0.5, 1.0], seed=1, replica=r)
    A = p.at(0.5) - p.at(0.0)
    B = p.at(1.0) - p.at(0.25)
    vals.append(trace_state(A @ B @ A @ B))
print(f"phi(a b a b): matrix mean {np.mean(vals):.4f} +- "
      f"{np.std(vals) / np.sqrt(len(vals)):.4f}, exact {wick_moment(K, word):.4f}"
      f" (finite-d bias is O(1/d); allowance 2/d = {2 / d:.4f})")

M1 = sample_matrix_at(512, 0.6, [1.0], seed=0).mats[0]
print("\nd=512, H=0.6: even moments of M_1 vs Catalan numbers")
for k in (2, 4, 6):
    print(f"  k={k}: {spectral_moment(M1, k):.4f} vs {catalan(k // 2)}")
print(f"  operator norm {operator_norm(M1):.4f} (semicircle edge 2)")

path = sample_matrix_path(MatrixEnsembleConfig(32, 8, 0.35, seed=3))
area = LevyAreaEval.finest(path)
U = np.eye(32)
sc = scale(path, U)
print("\nidentities on a d=32 path, relative to the scale", f"{sc:.1f}")
print("  Chen defect        ", chen_defect(area, 0.125, 0.5, 0.875, U) / sc)
print("  commutator identity", commutator_identity_defect(path, 5) / sc)
direct, reduced = level_diff(path, 4, 0, 16, U)
print("  level difference   ", np.linalg.norm(direct - reduced, 2) / sc)
