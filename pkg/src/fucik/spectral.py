"""Counting functions, interval bracketing, curve tracing and Weyl-type asymptotics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.optimize import brentq

from .eigen import HalfEigenvalue, eigenvalue
from .expr import WeightExpr
from .parallel import Failed, fan_out
from .prufer import (
    NEUMANN,
    Problem,
    ToleranceConfig,
    check_sign,
    count_targets,
    terminal_angle,
)

__all__ = [
    "CountResult",
    "BracketCounts",
    "SpectrumCurve",
    "WeylEstimate",
    "RemainderFit",
    "QuadratureError",
    "count",
    "bracketing_counts",
    "bracketing_defect",
    "trace_curve",
    "adaptive_simpson",
    "weyl_integral",
    "asymptotic_eigenvalue",
    "asymptotic_count",
    "campanato_seminorm",
    "remainder_rate",
]


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Counting


@dataclass(frozen=True)
class CountResult:
    lam: float
    t: float
    n_plus: int
    n_minus: int

    @property
    def total(self) -> int:
        return self.n_plus + self.n_minus


def count(problem: Problem, lam: float, t: float, tol: ToleranceConfig | None = None) -> CountResult:
    """N(lam, t): half-eigenvalues of both signs that do not exceed ``lam``.

    The terminal angle is monotone in lam, so the number of shooting targets
    it has passed is exactly the number of eigenvalues below lam.
    """
    if not (lam > 0 and t > 0):
        raise ValueError("lam and t must be positive")
    counts = []
    for sign in ("+", "-"):
        phi_end = terminal_angle(problem, lam, t, sign, tol)
        counts.append(count_targets(phi_end, problem.bc_left, problem.bc_right, sign))
    return CountResult(lam=lam, t=t, n_plus=counts[0], n_minus=counts[1])


@dataclass(frozen=True)
class BracketCounts:
    lam: float
    t: float
    c: float
    whole: int
    left: int
    right: int

    @property
    def defect(self) -> int:
        return self.whole - self.left - self.right


def bracketing_counts(problem: Problem, lam: float, t: float, c: float, tol: ToleranceConfig | None = None) -> BracketCounts:
    """Counts on the whole interval and on the two pieces split at ``c``.

    The pieces keep the outer boundary conditions and get a Neumann condition
    at the cut.
    """
    if not problem.x0 < c < problem.L:
        raise ValueError(f"cut point must lie strictly inside ({problem.x0}, {problem.L}), got {c}")
    left = problem.sub(problem.x0, c, problem.bc_left, NEUMANN)
    right = problem.sub(c, problem.L, NEUMANN, problem.bc_right)
    return BracketCounts(
        lam=lam,
        t=t,
        c=c,
        whole=count(problem, lam, t, tol).total,
        left=count(left, lam, t, tol).total,
        right=count(right, lam, t, tol).total,
    )


def bracketing_defect(problem: Problem, lam: float, t: float, c: float, tol: ToleranceConfig | None = None) -> int:
    return bracketing_counts(problem, lam, t, c, tol).defect


# ---------------------------------------------------------------------------
# Curve tracing


@dataclass
class SpectrumCurve:
    k: int
    sign: str
    # (t, alpha, beta)
    points: list[tuple[float, float, float]] = field(default_factory=list)
    # (t, error message) for rays where the solve failed
    failures: list[tuple[float, str]] = field(default_factory=list)


def _solve_ray(args, problem, k, sign, tol):
    return eigenvalue(problem, k, args, sign, tol)


def trace_curve(
    problem: Problem,
    k: int,
    sign: str,
    t_values,
    tol: ToleranceConfig | None = None,
    workers: int | None = None,
) -> SpectrumCurve:
    """Intersect the curve C_k^sign with each ray beta = t*alpha."""
    check_sign(sign)
    ts = [float(t) for t in t_values]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("t_values must be strictly increasing")
    if any(t <= 0 for t in ts):
        raise ValueError("t_values must be positive")
    results = fan_out(partial(_solve_ray, problem=problem, k=k, sign=sign, tol=tol), ts, workers)
    curve = SpectrumCurve(k=k, sign=sign)
    for t, res in zip(ts, results):
        if isinstance(res, Failed):
            curve.failures.append((t, str(res.error)))
        else:
            curve.points.append((t, res.alpha, res.beta))
    return curve


# ---------------------------------------------------------------------------
# Weyl asymptotics


@dataclass(frozen=True)
class WeylEstimate:
    t: float
    integral: float
    quadrature_error: float


def adaptive_simpson(f, a: float, b: float, tol: float, max_intervals: int = 200_000) -> tuple[float, float]:
    """Interval-halving Simpson rule with Richardson correction.

    Returns (value, error estimate).  Raises QuadratureError when the
    subdivision cap is hit before every panel meets its share of ``tol``.
    """
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    err = 0.0
    panels = 0
    while stack:
        lo, hi, flo, fmid, fhi, s, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        delta = left + right - s
        panels += 1
        if abs(delta) <= 15.0 * eps or hi - lo <= 1e-12 * max(1.0, abs(b - a)):
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            continue
        if panels > max_intervals:
            raise QuadratureError(f"subdivision cap {max_intervals} reached before tolerance {tol}")
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps))
    return total, err


def _weyl_integrand(problem: Problem, t: float):
    m, n = problem.m.scalar, problem.n.scalar

    def g(x):
        return 1.0 / (m(x) ** -0.5 + (t * n(x)) ** -0.5)

    return g


def weyl_integral(problem: Problem, t: float, quad_tol: float = 1e-10) -> WeylEstimate:
    """Integral over the interval of (m^-1/2 + (t n)^-1/2)^-1."""
    if not t > 0:
        raise ValueError("t must be positive")
    g = _weyl_integrand(problem, t)
    try:
        value, err = adaptive_simpson(g, problem.x0, problem.L, quad_tol)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        problem.m(np.linspace(problem.x0, problem.L, 257))
        problem.n(np.linspace(problem.x0, problem.L, 257))
        raise QuadratureError(f"integrand evaluation failed: {exc}") from exc
    return WeylEstimate(t=t, integral=value, quadrature_error=err)


def asymptotic_eigenvalue(problem: Problem, k: int, t: float, quad_tol: float = 1e-10) -> float:
    """Leading-order estimate (pi k / (2 I))^2 of the k-th half-eigenvalue."""
    if k < 1:
        raise ValueError("k must be >= 1")
    integral = weyl_integral(problem, t, quad_tol).integral
    return (math.pi * k / (2.0 * integral)) ** 2


def asymptotic_count(problem: Problem, lam: float, t: float, quad_tol: float = 1e-10) -> float:
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return 4.0 * math.sqrt(lam) / math.pi * weyl_integral(problem, t, quad_tol).integral


# ---------------------------------------------------------------------------
# Regularity of the weights


def _abs_dev_integral(w: WeightExpr, a: float, b: float, mean: float, nodes, weights, panels: int) -> float:
    """Integral of |w - mean| over [a, b], split at the sign changes of w - mean."""
    edges = np.linspace(a, b, panels + 1)
    dev = w(edges) - mean
    cuts = [a]
    g = lambda x: w.scalar(x) - mean  # noqa: E731
    for i in range(panels):
        if dev[i] == 0.0 and i > 0:
            cuts.append(float(edges[i]))
        elif dev[i] * dev[i + 1] < 0:
            cuts.append(brentq(g, edges[i], edges[i + 1], xtol=1e-15 * max(1.0, abs(b))))
    cuts.append(b)
    cuts = np.asarray(cuts)
    lo, hi = cuts[:-1], cuts[1:]
    half = 0.5 * (hi - lo)
    pts = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    vals = np.abs(w(pts) - mean)
    return float(np.sum(half * (vals @ weights)))


def campanato_seminorm(
    w: WeightExpr,
    L: float,
    gamma: float,
    depth: int,
    *,
    x0: float = 0.0,
    order: int = 10,
    panels: int = 4,
) -> float:
    """Dyadic estimate of  sup_I |I|^-gamma * integral_I |w - w_I|.

    The supremum runs over the dyadic subintervals of [x0, L] down to level
    ``depth`` (2**depth pieces), an equivalent seminorm up to a constant rather
    than the sup over every subinterval.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    best = 0.0
    for level in range(depth + 1):
        edges = np.linspace(x0, L, 2**level + 1)
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        pts = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
        means = (w(pts) @ weights) * 0.5  # mean = (half * sum) / (2 * half)
        width = hi[0] - lo[0]
        for a, b, mean in zip(lo, hi, means):
            dev = _abs_dev_integral(w, float(a), float(b), float(mean), nodes, weights, panels)
            best = max(best, dev / width**gamma)
    return best


@dataclass
class RemainderFit:
    k_values: list[int]
    numeric: list[float]
    asymptotic: list[float]
    r: list[float]
    # None when fewer than two r_k stand above the solver noise floor
    slope: float | None
    exact: bool


def _solve_k(k, problem, t, sign, tol) -> HalfEigenvalue:
    return eigenvalue(problem, k, t, sign, tol)


def remainder_rate(
    problem: Problem,
    t: float,
    k_values,
    tol: ToleranceConfig | None = None,
    *,
    sign: str = "+",
    workers: int | None = None,
) -> RemainderFit:
    """Relative gap r_k = |1 - asymptotic/numeric| and its log-log slope in k."""
    ks = [int(k) for k in k_values]
    if len(ks) < 4:
        raise ValueError("need at least 4 values of k")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_values must be strictly increasing")
    tol = tol or ToleranceConfig()
    results = fan_out(partial(_solve_k, problem=problem, t=t, sign=sign, tol=tol), ks, workers)
    for res in results:
        if isinstance(res, Failed):
            raise res.error
    integral = weyl_integral(problem, t).integral
    numeric = [res.lam for res in results]
    asym = [(math.pi * k / (2.0 * integral)) ** 2 for k in ks]
    r = [abs(1.0 - a / lam) for a, lam in zip(asym, numeric)]
    # relative accuracy the bisection and the ODE can actually deliver
    floors = [2.0 * res.achieved_eps / res.lam + 1e-8 for res in results]
    above = [(k, rk) for k, rk, fl in zip(ks, r, floors) if rk > fl]
    slope = None
    if len(above) >= 2:
        lk = np.log([k for k, _ in above])
        lr = np.log([rk for _, rk in above])
        slope = float(np.polyfit(lk, lr, 1)[0])
    return RemainderFit(k_values=ks, numeric=numeric, asymptotic=asym, r=r, slope=slope, exact=not above)
