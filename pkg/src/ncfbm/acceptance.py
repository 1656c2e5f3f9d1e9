"""The twelve acceptance experiments, each returning a :class:`Outcome`.

Shared by ``tests/test_acceptance.py`` and ``ncfbm report``. Every experiment
uses the fixed seed :data:`SEED` and checks its own runtime budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .combinat import catalan
from .errors import ParameterError
from .kernel import FBMKernel, Letter
from .levy_exact import (f_H, gamma_H, m_n_closed, m_n_lower_bound,
                         m_n_wick_oracle)
from .matrix_model import (MatrixEnsembleConfig, sample_matrix_at,
                           sample_matrix_path, spectral_moment, trace_state,
                           operator_norm)
from .moments import (Element, Word, norm_estimate, q_wick_moment,
                      richardson_limit, wick_moment, element_moment)
from .ncalg import Poly
from .rough import (LevyAreaEval, RateSeries, chen_defect,
                    commutator_identity_defect, delta1, delta2, ito_defect,
                    level_diff, pl_integral, rate_estimate, rough_integral,
                    scale, young_integral)

__all__ = ["Outcome", "CRITERIA", "run_all", "run_one", "SEED"]

SEED = 0


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} [{self.number:2d}] {self.title}: {self.detail} "
                f"({self.seconds:.1f}s / {self.budget:g}s)")


def _timed(number: int, title: str, budget: float):
    def wrap(fn: Callable[[], tuple[bool, str]]):
        def run() -> Outcome:
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            if dt > budget:
                detail += f"; runtime {dt:.1f}s over budget"
            return Outcome(number, title, bool(ok and dt <= budget), detail,
                           dt, budget)
        run.number = number
        run.title = title
        return run
    return wrap


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


# --------------------------------------------------------------------------


@_timed(1, "Riemann-sum trace on the uniform partition", 1.0)
def riemann_sum_trace():
    worst = 0.0
    for H in (0.2, 0.35, 0.5, 0.75):
        K = FBMKernel(H)
        for n in (2, 8, 64, 1024):
            terms = [(1.0, Word.of(Letter.point(i / n),
                                   Letter.increment(i / n, (i + 1) / n)))
                     for i in range(n)]
            val = element_moment(K, Element(terms))
            expected = 0.5 * (1.0 - n ** (1.0 - 2.0 * H))
            # the H = 1/2 target is 0, where only an absolute error is defined
            err = abs(val - expected) / (abs(expected) if expected else 1.0)
            worst = max(worst, err)
    return worst <= 1e-10, f"worst relative error {worst:.2e} (tol 1e-10)"


@_timed(2, "closed form vs Wick oracle for M(n)", 10.0)
def closed_vs_oracle():
    worst = 0.0
    for H in (0.1, 0.2, 0.25, 0.3, 0.4):
        for n in range(9):
            worst = max(worst, _rel(m_n_wick_oracle(H, n).value,
                                    m_n_closed(H, n).value))
    return worst <= 1e-10, f"worst relative gap {worst:.2e} (tol 1e-10)"


@_timed(3, "growth exponent of M(n) and the lower bound", 10.0)
def growth_exponent():
    ns = np.arange(4, 13)
    slopes, ok = [], True
    for H in (0.1, 0.2, 0.3, 0.4):
        y = [math.log2(m_n_closed(H, int(n)).value) for n in ns]
        slope = float(np.polyfit(ns, y, 1)[0])
        slopes.append(f"H={H}: {slope:+.4f} vs {1 - 4 * H:+.2f}")
        ok &= abs(slope - (1 - 4 * H)) <= 0.05
    bound_ok = all(m_n_closed(H, n).value >= m_n_lower_bound(H, n)
                   for H in (0.1, 0.2, 0.25) for n in range(13))
    return ok and bound_ok, "; ".join(slopes) + \
        f"; lower bound {'holds' if bound_ok else 'violated'} for n=0..12"


@_timed(4, "f_H bound and Gamma-f identity", 5.0)
def f_bound():
    worst_bound = 0.0
    worst_id = 0.0
    k = np.arange(1, 10_001, dtype=float)
    ki = np.arange(1, 101, dtype=float)
    for H in (0.05, 0.1, 0.15, 0.2, 0.25):
        ratio = np.abs(f_H(H, 1.0 / (2 * k))) / (2.0 / (2 * k) ** 4)
        worst_bound = max(worst_bound, float(ratio.max()))
        g = gamma_H(H, ki)
        gap = np.abs(g + ki ** (4 * H) * f_H(H, 1.0 / ki)) / (1 + np.abs(g))
        worst_id = max(worst_id, float(gap.max()))
    ok = worst_bound <= 1.0 and worst_id <= 1e-10
    return ok, (f"max |f_H(1/2k)| / (2/(2k)^4) = {worst_bound:.3f}; "
                f"identity gap {worst_id:.1e}")


@_timed(5, "exact identities on the matrix model", 30.0)
def matrix_identities():
    d = 64
    rng = np.random.default_rng(SEED)
    worst = {"chen": 0.0, "commutator": 0.0, "level_diff": 0.0}
    telescoping = 0.0
    for seed in (SEED, SEED + 1):
        path = sample_matrix_path(MatrixEnsembleConfig(d, 8, 0.3, seed))
        sc0 = scale(path)
        for N in (3, 6, 8):
            area = LevyAreaEval(path, N)
            for _ in range(3):
                U = rng.standard_normal((d, d)) / math.sqrt(d)
                s, u, t = np.sort(rng.integers(0, 257, size=3)) / 256.0
                worst["chen"] = max(worst["chen"], chen_defect(
                    area, s, u, t, U) / scale(path, U))
            worst["commutator"] = max(
                worst["commutator"],
                commutator_identity_defect(path, N) / sc0)
        for n, k, l in ((2, 0, 4), (4, 3, 11), (6, 10, 50)):
            U = rng.standard_normal((d, d)) / math.sqrt(d)
            a, b = level_diff(path, n, k, l, U)
            worst["level_diff"] = max(worst["level_diff"],
                                      float(np.linalg.norm(a - b, 2))
                                      / scale(path, U))
        h = delta1(path)
        for _ in range(20):
            s, u, t = np.sort(rng.integers(0, 257, size=3)) / 256.0
            telescoping = max(telescoping,
                              float(np.abs(delta2(h, s, u, t)).max()))
    ok = (worst["chen"] <= 1e-10 and worst["commutator"] <= 1e-12
          and worst["level_diff"] <= 1e-12 and telescoping == 0.0)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return ok, detail + f" (x scale); max |d2 d1| = {telescoping:g}"


def _moment_words():
    inc = Letter.increment
    a, b, c, e = inc(0, .25), inc(.25, .5), inc(.5, .75), inc(.75, 1)
    f, g = inc(0, .5), inc(.5, 1)
    specs = ["aa", "ab", "ac", "fg", "ff", "ae", "abc", "aab",
             "aaaa", "abab", "aabb", "abba", "fgfg", "acac",
             "aaaaaa", "ababab", "aabbcc", "abcabc", "ffgfgg", "abceab"]
    table = {"a": a, "b": b, "c": c, "e": e, "f": f, "g": g}
    return [(s, Word(tuple(table[ch] for ch in s))) for s in specs]


@_timed(6, "Monte-Carlo trace moments vs Wick formula", 300.0)
def trace_moments():
    d, reps, H = 128, 400, 0.3
    K = FBMKernel(H)
    words = _moment_words()
    times = [0.0, 0.25, 0.5, 0.75, 1.0]
    exact = np.array([wick_moment(K, w) for _, w in words])
    samples = np.empty((reps, len(words)))
    for r in range(reps):
        path = sample_matrix_at(d, H, times, SEED, replica=r)
        for j, (_, w) in enumerate(words):
            prod = np.eye(d)
            for letter in w:
                M = sum(c * path.at(t) for c, t in letter.terms)
                prod = prod @ M
            samples[r, j] = trace_state(prod)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(reps)
    tol = 5 * se + 2.0 / d
    bad = [words[j][0] for j in range(len(words))
           if abs(mean[j] - exact[j]) > tol[j]]
    worst = float(np.max(np.abs(mean - exact) / tol))
    detail = f"max |mean - exact| / (5 se + 2/d) = {worst:.2f}"
    if bad:
        detail += "; outside: " + ",".join(bad)
    return not bad, detail


@_timed(7, "Monte-Carlo Levy-area gap vs M(n)", 600.0)
def levy_gap_mc():
    d, reps = 128, 100
    worst, parts = 0.0, []
    for H in (0.2, 0.35):
        stats = np.zeros((reps, 5))
        cfg = MatrixEnsembleConfig(d, 7, H, SEED, reps)
        for r in range(reps):
            path = sample_matrix_path(cfg, r)
            for j, n in enumerate(range(2, 7)):
                _, D = level_diff(path, n, 0, 1 << n, np.eye(d))
                stats[r, j] = trace_state(D @ D.T)
        for j, n in enumerate(range(2, 7)):
            rel = _rel(stats[:, j].mean(), m_n_closed(H, n).value)
            worst = max(worst, rel)
        parts.append(f"H={H}: " + " ".join(
            f"{stats[:, j].mean() / m_n_closed(H, n).value:.3f}"
            for j, n in enumerate(range(2, 7))))
    return worst <= 0.10, f"MC/exact ratios n=2..6 {'; '.join(parts)}"


X2, X1 = Poly((0.0, 0.0, 1.0)), Poly((0.0, 1.0))


@_timed(8, "Young regime: Ito defect and approximation rate", 300.0)
def young_regime():
    path = sample_matrix_path(MatrixEnsembleConfig(64, 12, 0.75, SEED))
    levels = list(range(6, 13))
    ito = [ito_defect(path, X2, 0.0, 1.0, n, "young") for n in levels]
    ito_slope = rate_estimate(RateSeries(tuple(levels), tuple(ito)))
    # reference is the finest member of the same interpolation sequence; the
    # level-12 Riemann sum carries its own O(2^{-12(2H-1)}) bias and would
    # put a floor under every error
    ref = pl_integral(path, 12, X2, X1, 0.0, 1.0)
    ns = list(range(4, 11))
    errs = [float(np.linalg.norm(pl_integral(path, n, X2, X1, 0.0, 1.0)
                                 - ref, 2)) for n in ns]
    rate = rate_estimate(RateSeries(tuple(ns), tuple(errs)))
    ok = ito_slope < 0 and rate <= -0.2
    return ok, (f"Ito defect slope {ito_slope:+.3f} over levels 6..12; "
                f"approximation slope {rate:+.3f} (need <= -0.2)")


def _cauchy(path, area, levels, corrected: bool):
    sums = {}
    for n in levels:
        if corrected:
            sums[n] = rough_integral(path, area, X2, X1, 0.0, 1.0, n)
        else:
            sums[n] = young_integral(path, X2, X1, 0.0, 1.0, n)
    return sums


@_timed(9, "rough regime: corrected sums, Ito defect, consistency", 600.0)
def rough_regime():
    levels = list(range(5, 12))
    checked = levels[1:]
    path = sample_matrix_path(MatrixEnsembleConfig(64, 12, 0.35, SEED))
    area = LevyAreaEval.finest(path)
    Sc = _cauchy(path, area, levels, True)
    Sp = _cauchy(path, area, levels, False)
    ec = [float(np.linalg.norm(Sc[n] - Sc[n - 1], 2)) for n in checked]
    ep = [float(np.linalg.norm(Sp[n] - Sp[n - 1], 2)) for n in checked]
    fac_c = 2.0 ** -rate_estimate(RateSeries(tuple(checked), tuple(ec)))
    fac_p = 2.0 ** -rate_estimate(RateSeries(tuple(checked), tuple(ep)))
    ito = [ito_defect(path, Poly((0, 0, 0, 1.0)), 0.0, 1.0, n, "rough", area)
           for n in checked]
    ito_slope = rate_estimate(RateSeries(tuple(checked), tuple(ito)))
    del path, area, Sc, Sp

    H = 0.75
    path = sample_matrix_path(MatrixEnsembleConfig(64, 12, H, SEED))
    area = LevyAreaEval.finest(path)
    Sc = _cauchy(path, area, levels, True)
    Sp = _cauchy(path, area, levels, False)
    rho = 2.0 ** (1.0 - 2.0 * H)
    worst = 0.0
    for n in checked:
        env = rho / (1 - rho) * (np.linalg.norm(Sc[n] - Sc[n - 1], 2)
                                 + np.linalg.norm(Sp[n] - Sp[n - 1], 2))
        worst = max(worst, float(np.linalg.norm(Sc[n] - Sp[n], 2) / env))
    ok = fac_c >= 1.5 and fac_p < 1.5 and ito_slope < 0 and worst <= 1.0
    return ok, (f"corrected shrink/level {fac_c:.3f} (need >= 1.5), "
                f"plain {fac_p:.3f}; rough Ito slope {ito_slope:+.3f}; "
                f"H=0.75 gap/envelope max {worst:.2f}")


@_timed(10, "spectral moments vs semicircle", 120.0)
def spectral_limit():
    d, H = 512, 0.6
    worst, rows = 0.0, []
    for seed in range(SEED, SEED + 5):
        A = sample_matrix_at(d, H, [1.0], seed).mats[0]
        mom = [spectral_moment(A, k) for k in (2, 4, 6)]
        rel = [_rel(m, float(catalan(k // 2))) for m, k in zip(mom, (2, 4, 6))]
        worst = max(worst, max(rel))
        rows.append("/".join(f"{m:.3f}" for m in mom))
    return worst <= 0.05, (f"moments k=2/4/6 per seed {', '.join(rows)}; "
                           f"worst relative gap {worst:.3f}")


@_timed(11, "operator-norm growth of increments", 120.0)
def holder_norm():
    H = 0.3
    seq = norm_estimate(FBMKernel(H), Letter.increment(0.0, 1.0), 10)
    increasing = bool(np.all(np.diff(seq) > 0))
    seq_ok = increasing and seq[-1] >= 1.8
    d = 256
    path = sample_matrix_at(d, H, [0.0, 0.25, 0.5, 1.0], SEED)
    norms = []
    for s, t in ((0.0, 0.25), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0)):
        target = 2 * (t - s) ** H
        norms.append(operator_norm(path.at(t) - path.at(s)) / target)
    mat_ok = all(abs(r - 1) <= 0.15 for r in norms)
    return seq_ok and mat_ok, (
        f"moment sequence at r=10: {seq[-1]:.4f} (need >= 1.8, "
        f"increasing={increasing}; Richardson estimate "
        f"{richardson_limit(seq):.3f}); matrix norm / target "
        + " ".join(f"{r:.3f}" for r in norms))


@_timed(12, "q-deformed moments", 30.0)
def q_engine():
    rng = np.random.default_rng(SEED)
    K = FBMKernel(0.4)
    worst = 0.0
    for _ in range(20):
        L = int(rng.choice([2, 4, 6, 8, 10, 12]))
        w = Word(tuple(Letter.point(float(t))
                       for t in rng.integers(1, 17, size=L) / 16.0))
        a, b = q_wick_moment(K, w, 0.0), wick_moment(K, w)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    unit = Letter.point(1.0)
    four_ok = all(q_wick_moment(K, Word((unit,) * 4), q) == 2.0 + q
                  for q in (-0.5, 0.0, 0.25, 0.5))
    q = 0.5
    seq = [q_wick_moment(K, Word((unit,) * (2 * r)), q) ** (1 / (2 * r))
           for r in range(1, 9)]
    cap = 2 / math.sqrt(1 - q) + 0.05
    trend_ok = bool(np.all(np.diff(seq) > 0)) and max(seq) <= cap
    return worst <= 1e-12 and four_ok and trend_ok, (
        f"q=0 gap {worst:.1e}; length-4 exact {four_ok}; "
        f"growth r=1..8 up to {seq[-1]:.4f} (cap {cap:.4f})")


CRITERIA = [riemann_sum_trace, closed_vs_oracle, growth_exponent, f_bound,
            matrix_identities, trace_moments, levy_gap_mc, young_regime,
            rough_regime, spectral_limit, holder_norm, q_engine]


def run_one(number: int) -> Outcome:
    for fn in CRITERIA:
        if fn.number == number:
            return fn()
    raise ParameterError(f"no criterion {number}; valid are 1..{len(CRITERIA)}")


def run_all(callback: Callable[[Outcome], None] | None = None) -> list[Outcome]:
    out = []
    for fn in CRITERIA:
        res = fn()
        if callback is not None:
            callback(res)
        out.append(res)
    return out
