"""Command-line experiment runner.

Every subcommand writes CSV (to ``--out`` or stdout) preceded by ``#``
metadata lines: package version, subcommand, a hash of the resolved
configuration, seed, worker cap and a timestamp. The body depends only on
the configuration, so two runs differ at most in the timestamp line.

Exit status: 0 success, 1 acceptance failures (``report``), 2 invalid
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from datetime import datetime, timezone

from . import __version__

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

_PLOT_STUB = '''"""Plot {csv_name}; edit the column choice as needed."""
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt("{csv_name}", delimiter=",", names=True, comments="#",
                     dtype=None, encoding="utf-8")
cols = data.dtype.names
plt.plot(data[cols[0]], data[cols[1]], "o-")
plt.xlabel(cols[0])
plt.ylabel(cols[1])
plt.savefig("{csv_name}.png", dpi=120)
'''


class InvalidInput(Exception):
    """Raised for configuration problems found by the CLI itself."""


# --------------------------------------------------------------------------
# parsing helpers


def _pair(text: str) -> tuple[float, float]:
    try:
        s, t = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected 's,t', got {text!r}") from exc
    return s, t


def parse_letter(text: str):
    """``"c1*X(t1)+c2*X(t2)"`` (also ``"X(t)"``, ``"-X(a)"``) -> Letter."""
    import re
    from .kernel import Letter

    body = text.replace(" ", "")
    if not body:
        raise InvalidInput("empty letter")
    pat = re.compile(r"([+-]?)(?:([0-9.eE+-]+)\*)?X\(([0-9.eE+-]+)\)")
    pos, terms = 0, []
    for m in pat.finditer(body):
        if m.start() != pos:
            break
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        terms.append((sign * coef, float(m.group(3))))
        pos = m.end()
    if pos != len(body) or not terms:
        raise InvalidInput(f"cannot parse letter {text!r}; "
                           "use c1*X(t1)+c2*X(t2)")
    return Letter(tuple(terms))


def parse_word(text: str):
    """Semicolon-separated letters."""
    from .moments import Word
    return Word(tuple(parse_letter(p) for p in text.split(";") if p.strip()))


def read_config(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidInput(f"{path}:{lineno}: expected key = value")
                k, v = (x.strip() for x in line.split("=", 1))
                out[k.replace("-", "_")] = v
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    return out


# --------------------------------------------------------------------------
# output


class Emitter:
    """Collects CSV rows and writes them with the metadata header."""

    def __init__(self, args, header: list[str]):
        self.args = args
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")
        self.writer.writerow(header)
        self.trailer: list[str] = []

    def row(self, *values):
        self.writer.writerow([_fmt(v) for v in values])

    def note(self, text: str):
        self.trailer.append(text)

    def finish(self):
        cfg = _resolved_config(self.args)
        digest = hashlib.sha256(
            json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]
        meta = [f"# ncfbm {__version__}",
                f"# command: {self.args.command}",
                f"# config_hash: {digest}",
                f"# config: {json.dumps(cfg, sort_keys=True)}",
                f"# seed: {getattr(self.args, 'seed', None)}",
                f"# threads: {self.args.threads}",
                "# timestamp: "
                + datetime.now(timezone.utc).isoformat(timespec="seconds")]
        text = "\n".join(meta) + "\n" + self.buf.getvalue() + \
            "".join(f"# {t}\n" for t in self.trailer)
        out = getattr(self.args, "out", None)
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
            if self.args.emit_plot_script:
                name = os.path.basename(out)
                with open(out + ".plot.py", "w", encoding="utf-8") as fh:
                    fh.write(_PLOT_STUB.format(csv_name=name))
        else:
            sys.stdout.write(text)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _resolved_config(args) -> dict:
    skip = {"out", "threads", "config", "emit_plot_script", "func"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        cfg[k] = list(v) if isinstance(v, (list, tuple)) else v
    return cfg


# --------------------------------------------------------------------------
# subcommands


def cmd_pairings(args):
    from .combinat import (catalan, double_factorial, format_pairing,
                           visit_pairings)
    from .errors import SizeLimitError
    if args.count_only:
        n = catalan(args.m) if args.noncrossing else \
            double_factorial(2 * args.m - 1)
        print(n)
        return EXIT_OK
    if args.m > 10:
        raise SizeLimitError("listing is capped at m <= 10; "
                             "use --count-only")
    em = Emitter(args, ["index", "pairing", "crossings"])
    from .combinat import crossing_number
    for i, p in enumerate(visit_pairings(args.m, args.noncrossing)):
        em.row(i, format_pairing(p), crossing_number(p))
    em.finish()
    return EXIT_OK


def cmd_kernel(args):
    from .kernel import fbm_cov, fgn_rho, partial_sum_cov, white_rho, \
        _check_hurst
    _check_hurst(args.H)
    pairs = args.eval or [(0.5, 1.0)]
    if args.partial_sum:
        if args.n is None:
            raise InvalidInput("--partial-sum needs --n")
        rho = fgn_rho(args.H) if args.rho == "fgn" else white_rho
        em = Emitter(args, ["s", "t", "value (partial-sum covariance)"])
        for s, t in pairs:
            em.row(s, t, partial_sum_cov(rho, args.n, s, t, args.H))
    else:
        em = Emitter(args, ["s", "t", "value (fractional covariance)"])
        for s, t in pairs:
            em.row(s, t, fbm_cov(args.H, s, t))
    em.finish()
    return EXIT_OK


def cmd_moments(args):
    from .combinat import catalan, double_factorial
    from .kernel import FBMKernel
    from .moments import q_wick_moment, wick_moment
    K = FBMKernel(args.H)
    w = parse_word(args.word)
    m = len(w) // 2
    if args.q is None:
        val = wick_moment(K, w)
        count = catalan(m) if len(w) % 2 == 0 else 0
        kind = "noncrossing"
    else:
        val = q_wick_moment(K, w, args.q)
        count = double_factorial(2 * m - 1) if len(w) % 2 == 0 else 0
        kind = "all"
    em = Emitter(args, ["value (trace of word)", "pairings", "pairing_class"])
    em.row(val, count, kind)
    em.finish()
    return EXIT_OK


def cmd_nonconv(args):
    import math
    from .levy_exact import m_n_closed, m_n_wick_oracle
    from .kernel import _check_hurst
    _check_hurst(args.H)
    em = Emitter(args, ["n", "M_closed (area-gap second moment)",
                        "M_oracle (same, from increment covariances)",
                        "log2_ratio (log2 M(n)/M(n-1); limit 1-4H)"])
    prev = None
    for n in range(args.n_max + 1):
        mc = m_n_closed(args.H, n).value
        mo = m_n_wick_oracle(args.H, n).value if args.oracle else ""
        ratio = math.log2(mc / prev) if prev else ""
        em.row(n, mc, mo, ratio)
        prev = mc
    em.finish()
    return EXIT_OK


def cmd_diagnostics(args):
    from .levy_exact import cova_sum_diag
    incr = args.u is not None or args.v is not None
    if incr:
        header = ["n", "inc_even", "inc_odd", "bound_shape", "ratio"]
    else:
        header = ["n", "even_even", "even_odd", "odd_odd", "bound_shape",
                  "ratio"]
    em = Emitter(args, header)
    for n in range(args.n_min, args.n + 1):
        N = 1 << n
        k = N * args.k_frac[0] if args.k_frac else 0
        l = N * args.k_frac[1] if args.k_frac else N
        k, l = int(round(k)), int(round(l))
        rec = cova_sum_diag(args.H, n, k, l, args.eps, args.u, args.v)
        em.row(n, *rec.sums.values(), rec.bound, rec.ratio)
    em.finish()
    return EXIT_OK


def cmd_matrix_sim(args):
    from .matrix_model import (MatrixEnsembleConfig, operator_norm,
                               sample_matrix_path, spectral_histogram,
                               trace_state)
    cfg = MatrixEnsembleConfig(args.d, args.level, args.H, args.seed,
                               args.replicas)
    em = Emitter(args, ["replica", "t", "observable", "value"])
    last = None
    for r in range(cfg.replicas):
        path = sample_matrix_path(cfg, r)
        for k, t in enumerate(path.times):
            M = path.mats[k]
            em.row(r, float(t), "trace", trace_state(M))
            em.row(r, float(t), "trace_sq (phi(M_t^2); limit t^2H)",
                   trace_state(M @ M))
            em.row(r, float(t), "operator_norm (limit 2 t^H)",
                   operator_norm(M))
        last = path
    em.finish()
    if args.spectral_out:
        hist = spectral_histogram(last.mats[-1], args.bins)
        with open(args.spectral_out, "w", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_left", "bin_right", "density"])
            for a, b, c in zip(*hist):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
    return EXIT_OK


def cmd_integrate(args):
    import numpy as np
    from .matrix_model import (MatrixEnsembleConfig, sample_matrix_path,
                               trace_state)
    from .ncalg import Poly
    from .rough import (LevyAreaEval, ito_defect, rough_integral,
                        strato_free_integral, young_integral)
    path_level = args.path_level if args.path_level is not None else args.level
    if path_level < args.level:
        raise InvalidInput("--path-level must be >= --level")
    P, Q = Poly.parse(args.P), Poly.parse(args.Q)
    path = sample_matrix_path(MatrixEnsembleConfig(
        args.d, path_level, args.H, args.seed))
    area = LevyAreaEval.finest(path) if args.mode == "rough" else None

    def integral(level):
        if args.mode in ("young", "ito-free"):
            return young_integral(path, P, Q, args.s, args.t, level)
        if args.mode == "strato-free":
            return strato_free_integral(path, P, Q, args.s, args.t, level)
        return rough_integral(path, area, P, Q, args.s, args.t, level)

    I = integral(args.level)
    em = Emitter(args, ["observable", "value"])
    em.row("trace (phi of the integral)", trace_state(I))
    em.row("trace_of_square (phi(I I^T))", trace_state(I @ I.T))
    em.row("spectral_norm", float(np.linalg.norm(I, 2)))
    if args.level >= 1:
        prev = integral(args.level - 1)
        em.row("cauchy_estimate (||I_level - I_level-1||)",
               float(np.linalg.norm(I - prev, 2)))
    mode = {"young": "young", "ito-free": "young", "strato-free": "strato",
            "rough": "rough"}[args.mode]
    em.row("ito_defect_P (||dP(X) - int dP # dX||)",
           ito_defect(path, P, args.s, args.t, args.level, mode, area)
           if P.degree >= 1 else 0.0)
    em.finish()
    return EXIT_OK


def cmd_rates(args):
    import numpy as np
    from .levy_exact import m_n_closed
    from .matrix_model import (MatrixEnsembleConfig, sample_matrix_path,
                               trace_state)
    from .ncalg import Poly
    from .rough import (LevyAreaEval, RateSeries, level_diff, pl_integral,
                        rate_estimate, rough_integral)
    ns = list(range(args.n_min, args.n_max + 1))
    errs, extra = [], []
    if args.experiment in ("young-approx", "rough-approx"):
        if args.n_max > args.path_level:
            raise InvalidInput("--n-max must not exceed --path-level")
        P, Q = Poly.parse(args.P), Poly.parse(args.Q)
        path = sample_matrix_path(MatrixEnsembleConfig(
            args.d, args.path_level, args.H, args.seed))
        if args.experiment == "young-approx":
            # same interpolation sequence; a Riemann-sum reference has its
            # own bias of the size of the errors being measured
            ref = pl_integral(path, args.path_level, P, Q, 0.0, 1.0)
        else:
            ref = rough_integral(path, LevyAreaEval.finest(path), P, Q,
                                 0.0, 1.0, args.path_level)
        for n in ns:
            errs.append(float(np.linalg.norm(
                pl_integral(path, n, P, Q, 0.0, 1.0) - ref, 2)))
        header = ["n", "error (spectral norm vs finest-level integral)"]
    else:
        cfg = MatrixEnsembleConfig(args.d, args.n_max + 1, args.H, args.seed,
                                   args.replicas)
        acc = np.zeros(len(ns))
        for r in range(cfg.replicas):
            path = sample_matrix_path(cfg, r)
            for j, n in enumerate(ns):
                _, D = level_diff(path, n, 0, 1 << n, np.eye(args.d))
                acc[j] += trace_state(D @ D.T)
        errs = list(acc / cfg.replicas)
        extra = [m_n_closed(args.H, n).value for n in ns]
        header = ["n", "error (mean phi(D_n D_n^T))", "exact M(n)"]
    em = Emitter(args, header)
    for j, n in enumerate(ns):
        em.row(n, errs[j], *([extra[j]] if extra else []))
    if len(ns) >= 4 and all(e > 0 for e in errs):
        em.note(f"fitted_slope,{rate_estimate(RateSeries(tuple(ns), tuple(errs)))!r}")
    em.finish()
    return EXIT_OK


def cmd_report(args):
    from .acceptance import CRITERIA, run_one
    numbers = args.only or [fn.number for fn in CRITERIA]
    failed = 0
    for k in numbers:
        res = run_one(k)
        print(res.line(), flush=True)
        failed += not res.passed
    print(f"{len(numbers) - failed}/{len(numbers)} criteria passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--threads", type=int,
                        default=None, help="worker cap (env NCFBM_THREADS)")
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--emit-plot-script", action="store_true",
                        help="write a plotting stub next to --out")

    p = argparse.ArgumentParser(
        prog="ncfbm", description="Experiments on fractional semicircular "
        "processes and their matrix approximations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True,
                           metavar="{pairings,kernel,moments,nonconv,"
                           "diagnostics,matrix-sim,integrate,rates,report}")

    s = sub.add_parser("pairings", parents=[common],
                       help="enumerate or count pairings")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--noncrossing", action="store_true")
    s.add_argument("--count-only", action="store_true")
    s.set_defaults(func=cmd_pairings)

    s = sub.add_parser("kernel", parents=[common], help="evaluate kernels")
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--eval", type=_pair, action="append",
                   help="s,t (repeatable)")
    s.add_argument("--partial-sum", action="store_true")
    s.add_argument("--n", type=int)
    s.add_argument("--rho", choices=["fgn", "white"], default="fgn")
    s.set_defaults(func=cmd_kernel)

    s = sub.add_parser("moments", parents=[common], help="trace of a word")
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--q", type=float)
    s.add_argument("--word", required=True,
                   help="letters separated by ';', e.g. 'X(1)-X(0.5);X(1)'")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("nonconv", parents=[common],
                       help="area-gap moments M(n)")
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--oracle", action="store_true")
    s.set_defaults(func=cmd_nonconv)

    s = sub.add_parser("diagnostics", parents=[common],
                       help="covariance-sum ratio table")
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--k-frac", type=float, nargs=2, metavar=("S", "T"),
                   help="window [S, T] as fractions of [0, 1]")
    s.add_argument("--u", type=float)
    s.add_argument("--v", type=float)
    s.set_defaults(func=cmd_diagnostics)

    s = sub.add_parser("matrix-sim", parents=[common],
                       help="simulate the matrix model")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicas", type=int, default=1)
    s.add_argument("--spectral-out", help="histogram CSV of M_1")
    s.add_argument("--bins", type=int, default=50)
    s.set_defaults(func=cmd_matrix_sim)

    s = sub.add_parser("integrate", parents=[common],
                       help="one integral along a matrix path")
    s.add_argument("--mode", required=True,
                   choices=["young", "ito-free", "strato-free", "rough"])
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--d", type=int, default=32)
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--path-level", type=int)
    s.add_argument("--P", default="0,1", help="coefficients a0,a1,...")
    s.add_argument("--Q", default="1", help="coefficients b0,b1,...")
    s.add_argument("--s", type=float, default=0.0)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("rates", parents=[common],
                       help="error-vs-level series with fitted slope")
    s.add_argument("--experiment", required=True,
                   choices=["young-approx", "rough-approx", "levy-gap"])
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--d", type=int, default=32)
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--n-max", type=int, default=8)
    s.add_argument("--path-level", type=int, default=10)
    s.add_argument("--replicas", type=int, default=20)
    s.add_argument("--P", default="0,0,1")
    s.add_argument("--Q", default="0,1")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("report", parents=[common],
                       help="run the acceptance suite")
    s.add_argument("--only", type=int, nargs="+", metavar="N")
    s.set_defaults(func=cmd_report)
    return p


def _config_path(argv) -> str | None:
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from ``--config`` (flags win)."""
    path = _config_path(argv)
    command = next((a for a in argv if not a.startswith("-")), None)
    choices = parser._subparsers._group_actions[0].choices
    if path is None or command not in choices:
        return parser.parse_args(argv)
    values = read_config(path)
    sub = choices[command]
    known = {a.dest: a for a in sub._actions
             if a.dest not in ("help", "config")}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise InvalidInput(f"unknown config keys {unknown}; valid keys: "
                           f"{sorted(known)}")
    defaults = {}
    for k, v in values.items():
        act = known[k]
        if act.nargs == 0:
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        elif act.nargs in ("+", 2):
            conv = act.type or str
            try:
                defaults[k] = [conv(x) for x in v.replace(",", " ").split()]
            except ValueError as exc:
                raise InvalidInput(f"config key {k}: {exc}") from exc
        elif act.type is not None:
            try:
                defaults[k] = act.type(v)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise InvalidInput(f"config key {k}: {exc}") from exc
        else:
            defaults[k] = v
        if act.choices is not None and defaults[k] not in act.choices:
            raise InvalidInput(f"config key {k}: {v!r} not in "
                               f"{sorted(act.choices)}")
        act.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except InvalidInput as exc:
        print(f"ncfbm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.threads is None:
        env = os.environ.get("NCFBM_THREADS")
        try:
            args.threads = int(env) if env else 1
        except ValueError:
            print(f"ncfbm: error: NCFBM_THREADS={env!r} is not an integer",
                  file=sys.stderr)
            return EXIT_INVALID
    if args.threads < 1:
        print("ncfbm: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if "numpy" not in sys.modules:
        for var in _THREAD_VARS:
            os.environ.setdefault(var, str(args.threads))

    from .errors import NumericError, NCFBMError
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"ncfbm: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NCFBMError, InvalidInput, ValueError) as exc:
        print(f"ncfbm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
