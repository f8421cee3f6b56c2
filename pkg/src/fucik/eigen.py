"""Half-eigenvalues on a ray beta = t*alpha by bisection on the terminal angle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import WeightExpr, parse
from .prufer import (
    DIRICHLET,
    PI,
    Problem,
    ToleranceConfig,
    check_sign,
    first_target,
    integrate_angle,
    terminal_angle,
)

__all__ = [
    "BracketError",
    "Bracket",
    "HalfEigenvalue",
    "const_eigenvalue",
    "weight_bounds",
    "initial_bracket",
    "eigenvalue",
    "linear_eigenvalue",
    "target_angle",
    "nodal_march",
    "harmonic_weight",
]

BOUNDS_SAMPLES = 4097
BOUNDS_MARGIN = 1e-3
MAX_EXPANSIONS = 60


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(f"invalid bracket [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class HalfEigenvalue:
    k: int
    t: float
    sign: str
    lam: float
    achieved_eps: float
    iterations: int = 0

    @property
    def alpha(self) -> float:
        return self.lam

    @property
    def beta(self) -> float:
        return self.t * self.lam

    def as_record(self) -> dict:
        return {
            "k": self.k,
            "t": self.t,
            "sign": self.sign,
            "alpha": self.alpha,
            "beta": self.beta,
            "achieved_eps": self.achieved_eps,
        }


def const_eigenvalue(m0: float, n0: float, L: float, k: int, t: float, sign: str) -> float:
    """Closed-form half-eigenvalue for constant weights m0, n0 on an interval of length L.

    A positive hump has length pi/sqrt(lam*m0), a negative one pi/sqrt(lam*t*n0);
    the count of each kind is fixed by k and the sign.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    check_sign(sign)
    a = m0**-0.5
    b = (n0 * t) ** -0.5
    if k % 2 == 0:
        root = k * PI / (2 * L) * (a + b)
    elif sign == "+":
        root = PI / (2 * L) * ((k + 1) * a + (k - 1) * b)
    else:
        root = PI / (2 * L) * ((k - 1) * a + (k + 1) * b)
    return root * root


def weight_bounds(problem: Problem, margin: float = BOUNDS_MARGIN) -> tuple[float, float, float, float]:
    """(m_inf, m_sup, n_inf, n_sup) from a uniform grid, widened outward by ``margin``."""
    xs = np.linspace(problem.x0, problem.L, BOUNDS_SAMPLES)
    mv = problem.m(xs)
    nv = problem.n(xs)
    lo, hi = 1.0 - margin, 1.0 + margin
    return float(mv.min() * lo), float(mv.max() * hi), float(nv.min() * lo), float(nv.max() * hi)


def target_angle(problem: Problem, k: int, sign: str) -> float:
    """Terminal angle reached exactly at the k-th half-eigenvalue."""
    return first_target(problem.bc_left, problem.bc_right, sign) + (k - 1) * PI


def _reached(problem, lam, t, sign, target, tol) -> bool:
    # A terminal angle equal to the target counts as reached.
    return terminal_angle(problem, lam, t, sign, tol) >= target - 1e-9 * (1 + abs(target))


def initial_bracket(
    problem: Problem, k: int, t: float, sign: str, tol: ToleranceConfig | None = None
) -> Bracket:
    """Bracket from the constant-weight formula at the weight bounds.

    Larger weights give smaller eigenvalues, so the suprema give the lower end.
    The bracket is verified by shooting and widened by factors of 2 if needed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not t > 0:
        raise ValueError("t must be positive")
    tol = tol or ToleranceConfig()
    m_inf, m_sup, n_inf, n_sup = weight_bounds(problem)
    length = problem.length
    lo = const_eigenvalue(m_sup, n_sup, length, k, t, sign)
    hi = const_eigenvalue(m_inf, n_inf, length, k, t, sign)
    target = target_angle(problem, k, sign)
    lo_ok = not _reached(problem, lo, t, sign, target, tol)
    hi_ok = _reached(problem, hi, t, sign, target, tol)
    for _ in range(MAX_EXPANSIONS):
        if lo_ok and hi_ok:
            return Bracket(lo, hi)
        if not lo_ok:
            lo *= 0.5
            lo_ok = not _reached(problem, lo, t, sign, target, tol)
        if not hi_ok:
            hi *= 2.0
            hi_ok = _reached(problem, hi, t, sign, target, tol)
    raise BracketError(f"could not bracket eigenvalue k={k}, t={t}, sign={sign} after {MAX_EXPANSIONS} expansions")


def eigenvalue(
    problem: Problem,
    k: int,
    t: float,
    sign: str,
    tol: ToleranceConfig | None = None,
    *,
    method: str = "angle",
) -> HalfEigenvalue:
    """k-th half-eigenvalue on the ray of slope t.

    ``method="angle"`` bisects on the terminal angle; ``method="march"`` uses
    the half-turn by half-turn zero marching instead (slower, kept as a
    cross-check).
    """
    tol = tol or ToleranceConfig()
    check_sign(sign)
    br = initial_bracket(problem, k, t, sign, tol)
    lo, hi = br.lo, br.hi
    target = target_angle(problem, k, sign)
    if method == "angle":
        def reached(lam):
            return _reached(problem, lam, t, sign, target, tol)
    elif method == "march":
        if problem.bc_left != DIRICHLET or problem.bc_right != DIRICHLET:
            raise ValueError("zero marching is only defined for Dirichlet problems")

        def reached(lam):
            return nodal_march(problem, lam, t, k, sign, tol) < problem.L
    else:
        raise ValueError(f"unknown method {method!r}")

    it = 0
    while hi - lo >= tol.bisection_eps and it < tol.max_bisection_iters:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if reached(mid):
            hi = mid
        else:
            lo = mid
        it += 1
    return HalfEigenvalue(k=k, t=t, sign=sign, lam=0.5 * (lo + hi), achieved_eps=hi - lo, iterations=it)


def nodal_march(problem: Problem, lam: float, t: float, k: int, sign: str, tol: ToleranceConfig | None = None) -> float:
    """Position of the k-th zero after the left end, marching one hump at a time.

    Each hump restarts the angle at 0 (or pi on the negative branch) from the
    previous zero and runs until it advances by pi.  Returns ``problem.L`` if
    the k-th zero is not reached inside the interval.
    """
    tol = tol or ToleranceConfig()
    last_zero = problem.x0
    positive = sign == "+"
    for _ in range(k):
        path = integrate_angle(
            problem, lam, t, 0.0 if positive else PI, x0=last_zero, tol=tol, stop_at_event=True
        )
        if not path.events:
            return problem.L
        last_zero = path.events[0][0]
        if last_zero >= problem.L:
            return problem.L
        positive = not positive
    return last_zero


def harmonic_weight(m: WeightExpr, n: WeightExpr, t: float) -> WeightExpr:
    """The weight m*n*t/(m + n*t), pointwise below both m and t*n."""
    mt, nt = m.text(), n.text()
    return parse(f"({mt})*({nt})*{t!r}/(({mt})+({nt})*{t!r})")


def linear_eigenvalue(weight: WeightExpr, L: float, k: int, tol: ToleranceConfig | None = None) -> float:
    """k-th Dirichlet eigenvalue of -u'' = lam * s(x) u on (0, L)."""
    problem = Problem(L=L, m=weight, n=weight)
    return eigenvalue(problem, k, 1.0, "+", tol).lam
