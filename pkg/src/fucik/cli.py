"""Command-line interface.

    fucik eigen  --k 4 --t 1 --sign + --m "1+1/(x+1)" --n "1+cos(2*x)^2"
    fucik curve  --k 4 --sign + --t-min 1e-5 --t-max 1e5 --points 11
    fucik count  --lambda 1e4 --t 30
    fucik table  --which 2 [--full] [--compare]
    fucik plot   --k-max 6 --output spectrum.svg
    fucik bracket --c 0.5 --t 1 --lambda-max 1e4 --steps 40

Exit codes: 0 success, 2 usage error, 3 numerical failure.  Failures print a
single JSON line on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from functools import partial

import numpy as np

from . import tables
from .eigen import BracketError, eigenvalue
from .expr import WeightError
from .parallel import Failed, fan_out
from .plot import PlotSpec, build_plot_data, render_svg
from .prufer import IntegrationError, Problem, ToleranceConfig, integrate_angle, start_angle, write_path_csv
from .spectral import QuadratureError, asymptotic_count, bracketing_counts, count, trace_curve

EXIT_USAGE = 2
EXIT_NUMERIC = 3
T_MIN, T_MAX = 1e-6, 1e6


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}, ensure_ascii=False) + "\n")
    return code


def fmt_number(v) -> str:
    if isinstance(v, (bool, str)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def emit(rows: list[dict], fields: list[str], fmt: str, out) -> None:
    """CSV with a header row, or one JSON object per line."""
    if fmt == "json":
        for row in rows:
            out.write(json.dumps({k: row.get(k) for k in fields}, ensure_ascii=False) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([fmt_number(row[k]) if row.get(k) is not None else "" for k in fields])


# ---------------------------------------------------------------------------
# argument helpers


def _sign(text: str) -> str:
    aliases = {"+": "+", "plus": "+", "pos": "+", "-": "-", "minus": "-", "neg": "-"}
    if text not in aliases:
        raise argparse.ArgumentTypeError(f"sign must be + or -, got {text!r}")
    return aliases[text]


def _positive(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _cap_t(t: float) -> float:
    if t < T_MIN or t > T_MAX:
        capped = min(max(t, T_MIN), T_MAX)
        sys.stderr.write(json.dumps({"warning": "t capped", "requested": t, "used": capped}, ensure_ascii=False) + "\n")
        return capped
    return t


def _add_common(p: argparse.ArgumentParser, weights_required: bool = False) -> None:
    p.add_argument("--m", default=tables.DEFAULT_M, required=weights_required, help="weight m(x) (default: %(default)s)")
    p.add_argument("--n", default=tables.DEFAULT_N, required=weights_required, help="weight n(x) (default: %(default)s)")
    p.add_argument("--L", type=_positive, default=1.0, help="interval length (default: 1)")
    p.add_argument("--eps", type=_positive, default=1e-4, help="bisection accuracy on lambda (default: 1e-4)")
    p.add_argument("--rtol", type=_positive, default=1e-10, help="ODE relative tolerance")
    p.add_argument("--atol", type=_positive, default=1e-10, help="ODE absolute tolerance")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", help="write to this file instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fucik", description="Fucik spectrum of -u'' = a m u+ - b n u- with Dirichlet conditions")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("eigen", help="one half-eigenvalue on the ray beta = t alpha")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=_positive, required=True)
    p.add_argument("--sign", type=_sign, required=True)
    p.add_argument("--dump-path", help="also write the Prufer path at the eigenvalue as CSV (x,phi,rho)")
    _add_common(p)

    p = sub.add_parser("curve", help="trace C_k^sign over a range of slopes")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sign", type=_sign, required=True)
    p.add_argument("--t-min", type=_positive, required=True)
    p.add_argument("--t-max", type=_positive, required=True)
    p.add_argument("--points", type=int, required=True)
    spacing = p.add_mutually_exclusive_group()
    spacing.add_argument("--log", dest="log", action="store_true", default=True, help="log-spaced slopes (default)")
    spacing.add_argument("--linear", dest="log", action="store_false", help="linearly spaced slopes")
    _add_common(p)

    p = sub.add_parser("count", help="spectral counting function")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--t", type=_positive, required=True)
    _add_common(p)

    p = sub.add_parser("table", help="reproduce one of the published tables")
    p.add_argument("--which", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--full", action="store_true", help="table 2: include k = 500 and 1000 (slow)")
    p.add_argument("--compare", action="store_true", help="add the published values as extra columns")
    _add_common(p)

    p = sub.add_parser("plot", help="SVG of the first curves")
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--signs", default="+-", help="which signs to draw: +, - or +- (default)")
    p.add_argument("--t-min", type=_positive, default=1e-3)
    p.add_argument("--t-max", type=_positive, default=1e3)
    p.add_argument("--points", type=int, default=61, help="number of log-spaced slopes")
    p.add_argument("--alpha-max", type=_positive, default=300.0)
    p.add_argument("--beta-max", type=_positive, default=300.0)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=640)
    _add_common(p)

    p = sub.add_parser("bracket", help="bracketing defect N(0,L) - N(0,c) - N(c,L) over a lambda grid")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--t", type=_positive, required=True)
    p.add_argument("--lambda-max", type=_positive, required=True)
    p.add_argument("--lambda-min", type=_positive, default=1.0)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--linear", action="store_true", help="linear instead of log spacing")
    _add_common(p)
    return parser


def _problem(args) -> Problem:
    try:
        return Problem.from_text(args.m, args.n, L=args.L)
    except WeightError as exc:
        raise UsageError(f"invalid weight: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _tol(args) -> ToleranceConfig:
    return ToleranceConfig(ode_rel_tol=args.rtol, ode_abs_tol=args.atol, bisection_eps=args.eps)


def _grid(lo: float, hi: float, n: int, log: bool) -> list[float]:
    if n < 1:
        raise UsageError("number of points must be >= 1")
    if n == 1:
        return [lo]
    if hi <= lo:
        raise UsageError("upper end of the grid must exceed the lower end")
    return [float(v) for v in (np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n))]


# ---------------------------------------------------------------------------
# commands (each returns rows, fields, exit code)


def cmd_eigen(args):
    if args.k < 1:
        raise UsageError("k must be ≥ 1")
    problem = _problem(args)
    tol = _tol(args)
    res = eigenvalue(problem, args.k, _cap_t(args.t), args.sign, tol)
    if args.dump_path:
        path = integrate_angle(
            problem, res.lam, res.t, start_angle(problem.bc_left, res.sign), tol=tol,
            record_path=True, track_amplitude=True, sign=res.sign,
        )
        with open(args.dump_path, "w", encoding="utf-8", newline="") as fh:
            write_path_csv(path, fh)
    return [res.as_record()], ["k", "t", "sign", "alpha", "beta", "achieved_eps"], 0


def cmd_curve(args):
    if args.k < 1:
        raise UsageError("k must be ≥ 1")
    problem = _problem(args)
    ts = [_cap_t(t) for t in _grid(args.t_min, args.t_max, args.points, args.log)]
    ts = sorted(set(ts))
    curve = trace_curve(problem, args.k, args.sign, ts, _tol(args))
    good = {t: (a, b) for t, a, b in curve.points}
    bad = dict(curve.failures)
    rows = []
    for t in ts:
        if t in good:
            a, b = good[t]
            rows.append({"t": t, "alpha": a, "beta": b, "k": args.k, "sign": args.sign})
        else:
            rows.append({"t": t, "alpha": "ERROR", "beta": "ERROR", "k": args.k, "sign": args.sign})
            sys.stderr.write(json.dumps({"error": "numerical", "t": t, "message": bad[t]}, ensure_ascii=False) + "\n")
    return rows, ["t", "alpha", "beta", "k", "sign"], (EXIT_NUMERIC if bad else 0)


def cmd_count(args):
    problem = _problem(args)
    t = _cap_t(args.t)
    res = count(problem, args.lam, t, _tol(args))
    row = {
        "lambda": args.lam,
        "t": t,
        "n_plus": res.n_plus,
        "n_minus": res.n_minus,
        "total": res.total,
        "asymptotic_count": asymptotic_count(problem, args.lam, t),
    }
    return [row], list(row), 0


def cmd_table(args):
    problem = _problem(args)
    tol = _tol(args)
    if args.which == 1:
        rows = tables.table1(problem, tol, compare=args.compare)
        fields = ["t", "alpha", "beta"] + (["published_alpha", "published_beta"] if args.compare else [])
    elif args.which == 2:
        rows = tables.table2(problem, tol, full=args.full, compare=args.compare)
        fields = ["k", "t", "asymptotic", "numeric", "rel_error"]
        if args.compare:
            fields += ["published_asymptotic", "published_numeric", "published_rel_error"]
    else:
        rows = tables.table3(problem, tol, compare=args.compare)
        fields = ["t", "k", "numeric", "asymptotic", "rel_error"]
        if args.compare:
            fields += ["published_numeric", "published_asymptotic", "published_rel_error"]
    return rows, fields, 0


def cmd_plot(args):
    if args.points < 1:
        raise UsageError("the t grid is empty")
    signs = tuple(s for s in "+-" if s in args.signs)
    if not signs or set(args.signs) - {"+", "-"}:
        raise UsageError("--signs must be +, - or +-")
    problem = _problem(args)
    ts = tuple(_cap_t(t) for t in _grid(args.t_min, args.t_max, args.points, True))
    try:
        spec = PlotSpec(
            k_max=args.k_max, signs=signs, t_grid=tuple(sorted(set(ts))), alpha_max=args.alpha_max,
            beta_max=args.beta_max, width=args.width, height=args.height,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = build_plot_data(problem, spec, _tol(args))
    failed = [(c.k, c.sign, t, msg) for c in data.curves for t, msg in c.failures]
    for k, sign, t, msg in failed:
        sys.stderr.write(json.dumps({"error": "numerical", "k": k, "sign": sign, "t": t, "message": msg}, ensure_ascii=False) + "\n")
    svg = render_svg(data, spec, title=f"m(x) = {args.m},  n(x) = {args.n}")
    return svg, None, (EXIT_NUMERIC if failed else 0)


def _bracket_row(lam, problem, t, c, tol):
    return bracketing_counts(problem, lam, t, c, tol)


def cmd_bracket(args):
    problem = _problem(args)
    if not 0 < args.c < args.L:
        raise UsageError(f"c must lie strictly inside (0, {args.L}), got {args.c}")
    if args.steps < 1:
        raise UsageError("steps must be >= 1")
    if args.lambda_min > args.lambda_max:
        raise UsageError("lambda-min must not exceed lambda-max")
    t = _cap_t(args.t)
    lams = _grid(args.lambda_min, args.lambda_max, args.steps, not args.linear) if args.steps > 1 else [args.lambda_max]
    results = fan_out(partial(_bracket_row, problem=problem, t=t, c=args.c, tol=_tol(args)), lams)
    rows = []
    code = 0
    for lam, res in zip(lams, results):
        if isinstance(res, Failed):
            code = EXIT_NUMERIC
            rows.append({"lambda": lam, "N_whole": "ERROR", "N_left": "ERROR", "N_right": "ERROR", "defect": "ERROR"})
            sys.stderr.write(json.dumps({"error": "numerical", "lambda": lam, "message": str(res.error)}, ensure_ascii=False) + "\n")
        else:
            rows.append({"lambda": lam, "N_whole": res.whole, "N_left": res.left, "N_right": res.right, "defect": res.defect})
    return rows, ["lambda", "N_whole", "N_left", "N_right", "defect"], code


COMMANDS = {
    "eigen": cmd_eigen,
    "curve": cmd_curve,
    "count": cmd_count,
    "table": cmd_table,
    "plot": cmd_plot,
    "bracket": cmd_bracket,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        rows, fields, code = COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except (BracketError, IntegrationError, QuadratureError, WeightError, ArithmeticError) as exc:
        return _fail("numerical", f"{type(exc).__name__}: {exc}", EXIT_NUMERIC)

    buf = io.StringIO()
    if fields is None:
        buf.write(rows)
    else:
        emit(rows, fields, args.format, buf)
    text = buf.getvalue()
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            return _fail("io", str(exc), EXIT_USAGE)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
