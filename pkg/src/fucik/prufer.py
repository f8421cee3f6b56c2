"""Prüfer-angle shooting for  -u'' = lam * (m u^+ - t n u^-).

With ``q = lam*m`` where u > 0 and ``q = lam*t*n`` where u < 0 the modified
Prüfer substitution

    u = rho * sin(phi) * q**(-1/4),    u' = rho * cos(phi) * q**(1/4)

turns the equation into

    phi'       = sqrt(q) + (q'/q) * sin(phi) * cos(phi) / 2
    (log rho)' = -(q'/q) * cos(2 phi) / 4

The branch (which weight is active) flips each time ``phi`` crosses a multiple
of pi.  Those crossings are located exactly and the integration restarts from
them, so the right-hand side is smooth on every segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .expr import DomainError, WeightExpr, parse

__all__ = [
    "DIRICHLET",
    "NEUMANN",
    "IntegrationError",
    "Problem",
    "ToleranceConfig",
    "PruferPath",
    "Eigenfunction",
    "prufer_rhs",
    "integrate_angle",
    "terminal_angle",
    "start_angle",
    "first_target",
    "count_targets",
    "reconstruct_eigenfunction",
    "write_path_csv",
]

Sign = Literal["+", "-"]
DIRICHLET = "dirichlet"
NEUMANN = "neumann"
POSITIVITY_SAMPLES = 4097

PI = math.pi
HALF_PI = 0.5 * math.pi


class IntegrationError(RuntimeError):
    """The angle ODE could not be advanced (step underflow, non-finite state)."""

    def __init__(self, message: str, x: float | None = None):
        self.x = x
        super().__init__(message if x is None else f"{message} at x={x!r}")


def check_sign(sign: str) -> str:
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return sign


@dataclass(frozen=True)
class ToleranceConfig:
    ode_rel_tol: float = 1e-10
    ode_abs_tol: float = 1e-10
    event_x_tol: float = 1e-12
    bisection_eps: float = 1e-4
    max_bisection_iters: int = 200

    def __post_init__(self):
        for name in ("ode_rel_tol", "ode_abs_tol", "event_x_tol", "bisection_eps", "max_bisection_iters"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def with_(self, **changes) -> "ToleranceConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Problem:
    """Interval ``[x0, L]``, the two weights and a boundary condition per end.

    ``x0`` is 0 for the problems the user states; sub-interval problems built by
    :meth:`sub` start elsewhere.
    """

    L: float
    m: WeightExpr
    n: WeightExpr
    bc_left: str = DIRICHLET
    bc_right: str = DIRICHLET
    x0: float = 0.0
    positivity_margin: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.L) and math.isfinite(self.x0)) or not self.L > self.x0:
            raise ValueError(f"interval must satisfy x0 < L, got [{self.x0}, {self.L}]")
        for bc in (self.bc_left, self.bc_right):
            if bc not in (DIRICHLET, NEUMANN):
                raise ValueError(f"unknown boundary condition {bc!r}")
        xs = np.linspace(self.x0, self.L, POSITIVITY_SAMPLES)
        for label, w in (("m", self.m), ("n", self.n)):
            vals = w(xs)
            if vals.min() <= self.positivity_margin:
                i = int(np.argmin(vals))
                raise ValueError(
                    f"weight {label} = {w.source_text!r} is not positive on [{self.x0}, {self.L}]:"
                    f" value {float(vals[i]):.6g} at x={float(xs[i]):.6g}"
                )

    @classmethod
    def from_text(cls, m: str, n: str, L: float = 1.0, **kw) -> "Problem":
        return cls(L=L, m=parse(m), n=parse(n), **kw)

    @property
    def length(self) -> float:
        return self.L - self.x0

    def sub(self, a: float, b: float, bc_left: str, bc_right: str) -> "Problem":
        return replace(self, x0=a, L=b, bc_left=bc_left, bc_right=bc_right)

    def with_weights(self, m: WeightExpr, n: WeightExpr) -> "Problem":
        return replace(self, m=m, n=n)


@dataclass
class PruferPath:
    lam: float
    t: float
    sign: str
    xs: list[float]
    phis: list[float]
    terminal_angle: float
    x_end: float
    segments: list[int] = field(default_factory=list)
    log_rhos: list[float] | None = None
    # (x, new segment index, |phi(x) - j*pi| from the final located step)
    events: list[tuple[float, int, float]] = field(default_factory=list)
    steps: int = 0

    @property
    def rhos(self) -> list[float] | None:
        if self.log_rhos is None:
            return None
        return [math.exp(v) for v in self.log_rhos]


# ---------------------------------------------------------------------------
# Right-hand side


def prufer_rhs(lam: float, t: float, branch: str, x: float, phi: float, problem: Problem) -> float:
    """Angle derivative on one branch, evaluated with full domain checking."""
    if branch == "positive":
        w, scale = problem.m, 1.0
    elif branch == "negative":
        w, scale = problem.n, t
    else:
        raise ValueError(f"branch must be 'positive' or 'negative', got {branch!r}")
    f = w.eval(x)
    return math.sqrt(lam * scale * f) + 0.5 * w.eval_derivative(x) / f * math.cos(phi) * math.sin(phi)


def _branch(w: WeightExpr, lam_scaled: float):
    """Return (angle rhs, log-amplitude rhs, q) for one branch as fast closures."""
    f = w.scalar
    sqrt, sin, cos = math.sqrt, math.sin, math.cos
    if w.is_constant:
        c = sqrt(lam_scaled * w.value.value)
        q0 = lam_scaled * w.value.value

        def rhs(x, phi):
            return c

        def amp(x, phi):
            return 0.0

        def q(x):
            return q0

        return rhs, amp, q

    df = w.scalar_derivative

    def rhs(x, phi):
        v = f(x)
        return sqrt(lam_scaled * v) + 0.25 * df(x) / v * sin(2.0 * phi)

    def amp(x, phi):
        return -0.25 * df(x) / f(x) * cos(2.0 * phi)

    def q(x):
        return lam_scaled * f(x)

    return rhs, amp, q


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

SAFETY = 0.9
ALPHA = 0.7 / 5
BETA = 0.4 / 5
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


def _dp_step(rhs, x, y, h, k1):
    y2 = y + h * (A21 * k1)
    k2 = rhs(x + C2 * h, y2)
    y3 = y + h * (A31 * k1 + A32 * k2)
    k3 = rhs(x + C3 * h, y3)
    y4 = y + h * (A41 * k1 + A42 * k2 + A43 * k3)
    k4 = rhs(x + C4 * h, y4)
    y5 = y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)
    k5 = rhs(x + C5 * h, y5)
    y6 = y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
    k6 = rhs(x + h, y6)
    ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
    k7 = rhs(x + h, ynew)
    err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    return ynew, k7, err, (y, y3, y4, y5, y6)


def _amp_increment(amp, x, h, stages):
    # The amplitude equation does not feed back into phi, so it is advanced
    # with the same stage angles (quadrature along the stage points).
    y1, y3, y4, y5, y6 = stages
    return h * (
        B1 * amp(x, y1) + B3 * amp(x + C3 * h, y3) + B4 * amp(x + C4 * h, y4)
        + B5 * amp(x + C5 * h, y5) + B6 * amp(x + h, y6)
    )


def _locate(rhs, x, phi, k1, h, ynew, target, xtol):
    """Find s in (0, h] with phi(x + s) = target by safeguarded Newton on the RK step map."""
    if ynew == target:
        y, _, _, st = _dp_step(rhs, x, phi, h, k1)
        return h, y, st
    lo, hi = 0.0, h
    glo, ghi = phi - target, ynew - target
    s = h * (-glo) / (ghi - glo)
    for _ in range(100):
        y, ks, _, st = _dp_step(rhs, x, phi, s, k1)
        g = y - target
        if g == 0.0:
            return s, y, st
        if g > 0:
            hi = s
        else:
            lo = s
        snew = s - g / ks if ks > 0 else 0.5 * (lo + hi)
        if not (lo <= snew <= hi):
            snew = 0.5 * (lo + hi)
        if abs(snew - s) <= xtol or hi - lo <= xtol:
            s = snew
            break
        s = snew
    y, _, _, st = _dp_step(rhs, x, phi, s, k1)
    return s, y, st


def integrate_angle(
    problem: Problem,
    lam: float,
    t: float,
    phi0: float,
    x0: float | None = None,
    x1: float | None = None,
    tol: ToleranceConfig | None = None,
    record_path: bool = False,
    *,
    sign: str | None = None,
    track_amplitude: bool = False,
    max_step: float | None = None,
    stop_at_event: bool = False,
) -> PruferPath:
    """Integrate the angle equation from ``(x0, phi0)`` to ``x1``.

    The branch on ``[j pi, (j+1) pi)`` is positive for even ``j``.  Each time the
    angle reaches the next multiple of pi the crossing is located to
    ``tol.event_x_tol`` and the branch switches there.  With ``stop_at_event``
    the integration ends at the first crossing instead.
    """
    tol = tol or ToleranceConfig()
    if not (lam > 0 and t > 0):
        raise ValueError("lam and t must be positive")
    if phi0 < 0:
        raise ValueError("phi0 must be non-negative")
    x0 = problem.x0 if x0 is None else x0
    x1 = problem.L if x1 is None else x1
    if not (problem.x0 <= x0 < x1 <= problem.L):
        raise ValueError(f"need {problem.x0} <= x0 < x1 <= {problem.L}, got x0={x0}, x1={x1}")
    branches = (_branch(problem.m, lam), _branch(problem.n, lam * t))
    rtol, atol, xtol = tol.ode_rel_tol, tol.ode_abs_tol, tol.event_x_tol
    max_step = (x1 - x0) if max_step is None else max_step

    x, phi = x0, phi0
    j = int(math.floor(phi0 / PI))
    if (j + 1) * PI <= phi0:  # guard against floor rounding
        j += 1
    rhs, amp, q = branches[j & 1]
    next_target = (j + 1) * PI
    log_rho = 0.0

    xs = [x] if record_path else []
    phis = [phi] if record_path else []
    segs = [j] if record_path else []
    log_rhos = [0.0] if (record_path and track_amplitude) else None
    events: list[tuple[float, int, float]] = []

    try:
        k1 = rhs(x, phi)
        h = min(x1 - x, max_step, 0.1 / max(abs(k1), 1e-12))
        en_prev = 1e-4
        nsteps = 0
        while x < x1:
            remaining = x1 - x
            if remaining <= 4 * 2.2e-16 * max(1.0, abs(x1)):
                # float rounding left a sliver after the last event
                x = x1
                if record_path:
                    xs.append(x)
                    phis.append(phi)
                    segs.append(j)
                    if log_rhos is not None:
                        log_rhos.append(log_rho)
                break
            h = min(h, max_step)
            last = h >= remaining
            if last:
                h = remaining
            if h <= 16 * 2.2e-16 * max(1.0, abs(x)):
                raise IntegrationError("step size underflow", x)
            ynew, k7, err, stages = _dp_step(rhs, x, phi, h, k1)
            if not (math.isfinite(ynew) and math.isfinite(err)):
                raise IntegrationError("non-finite state", x)
            en = abs(err) / (atol + rtol * max(abs(phi), abs(ynew)))
            if en > 1.0:
                h *= max(MIN_FACTOR, SAFETY * en ** (-0.2))
                continue
            nsteps += 1
            if ynew >= next_target:
                s, yev, st = _locate(rhs, x, phi, k1, h, ynew, next_target, xtol)
                if track_amplitude:
                    log_rho += _amp_increment(amp, x, s, st)
                xev = x1 if (last and s >= h) else x + s
                qo = q(xev)
                j += 1
                rhs, amp, q = branches[j & 1]
                if track_amplitude:
                    log_rho += 0.25 * (math.log(qo) - math.log(q(xev)))
                events.append((xev, j, abs(yev - next_target)))
                x, phi = xev, next_target
                next_target = (j + 1) * PI
                k1 = rhs(x, phi)
                if record_path:
                    xs.append(x)
                    phis.append(phi)
                    segs.append(j)
                    if log_rhos is not None:
                        log_rhos.append(log_rho)
                if stop_at_event:
                    break
                h = max(h - s, 0.1 / max(abs(k1), 1e-12))
                continue
            if track_amplitude:
                log_rho += _amp_increment(amp, x, h, stages)
            x = x1 if last else x + h
            phi = ynew
            k1 = k7
            if record_path:
                xs.append(x)
                phis.append(phi)
                segs.append(j)
                if log_rhos is not None:
                    log_rhos.append(log_rho)
            if en == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * en ** (-ALPHA) * en_prev**BETA))
            en_prev = max(en, 1e-4)
            h *= factor
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        if isinstance(exc, DomainError):
            raise
        # Re-evaluate with diagnostics to name the failing subexpression.
        problem.m.eval(x)
        problem.m.eval_derivative(x)
        problem.n.eval(x)
        problem.n.eval_derivative(x)
        raise IntegrationError(f"weight evaluation failed ({exc})", x) from exc

    return PruferPath(
        lam=lam,
        t=t,
        sign=sign if sign is not None else ("+" if (int(math.floor(phi0 / PI)) & 1) == 0 else "-"),
        xs=xs,
        phis=phis,
        terminal_angle=phi,
        x_end=x,
        segments=segs,
        log_rhos=log_rhos,
        events=events,
        steps=nsteps,
    )


# ---------------------------------------------------------------------------
# Shooting targets


def start_angle(bc_left: str, sign: str) -> float:
    """Initial angle: u(x0) = 0 puts phi on a multiple of pi, u'(x0) = 0 halfway."""
    check_sign(sign)
    base = 0.0 if bc_left == DIRICHLET else HALF_PI
    return base if sign == "+" else base + PI


def first_target(bc_left: str, bc_right: str, sign: str) -> float:
    """Smallest admissible terminal angle strictly above the start angle."""
    half = 0 if bc_left == DIRICHLET else 1
    if sign == "-":
        half += 2
    want_even = bc_right == DIRICHLET
    nxt = half + 1
    if (nxt % 2 == 0) != want_even:
        nxt += 1
    return nxt * HALF_PI


def count_targets(phi_end: float, bc_left: str, bc_right: str, sign: str) -> int:
    """Number of admissible terminal angles not exceeding ``phi_end``."""
    first = first_target(bc_left, bc_right, sign)
    if phi_end < first:
        return 0
    return int(math.floor((phi_end - first) / PI)) + 1


def terminal_angle(problem: Problem, lam: float, t: float, sign: str, tol: ToleranceConfig | None = None) -> float:
    phi0 = start_angle(problem.bc_left, sign)
    return integrate_angle(problem, lam, t, phi0, tol=tol, sign=sign).terminal_angle


# ---------------------------------------------------------------------------
# Eigenfunction reconstruction


@dataclass
class Eigenfunction:
    x: np.ndarray
    u: np.ndarray
    zeros: list[float]


def reconstruct_eigenfunction(path: PruferPath, problem: Problem, zero_angle_tol: float = 1e-6) -> Eigenfunction:
    """Rebuild ``u`` from a path recorded with amplitude.

    Scaled so that ``+-u'(x0) = 1`` for a Dirichlet start and ``|u(x0)| = 1``
    for a Neumann start.
    """
    if path.log_rhos is None or not path.xs:
        raise ValueError("path lacks amplitude samples; integrate with record_path and track_amplitude")
    x = np.asarray(path.xs)
    phi = np.asarray(path.phis)
    seg = np.asarray(path.segments)
    rho = np.exp(np.asarray(path.log_rhos))
    q = np.where(seg % 2 == 0, path.lam * problem.m(x), path.lam * path.t * problem.n(x))
    u = rho * np.sin(phi) * q**-0.25
    if problem.bc_left == DIRICHLET:
        scale = rho[0] * q[0] ** 0.25
    else:
        scale = rho[0] * q[0] ** -0.25
    u = u / scale

    zeros = []
    if abs(math.remainder(path.phis[0], PI)) <= zero_angle_tol:
        zeros.append(float(x[0]))
    zeros.extend(e[0] for e in path.events)
    end = path.terminal_angle
    if abs(math.remainder(end, PI)) <= zero_angle_tol * (1 + abs(end)) and not (zeros and abs(zeros[-1] - x[-1]) < 1e-9):
        zeros.append(float(x[-1]))
    return Eigenfunction(x=x, u=u, zeros=zeros)


def write_path_csv(path: PruferPath, fh) -> None:
    """Dump ``x,phi[,rho]`` with one row per recorded sample."""
    rhos = path.rhos
    fh.write("x,phi,rho\n" if rhos is not None else "x,phi\n")
    for i, (x, phi) in enumerate(zip(path.xs, path.phis)):
        if rhos is not None:
            fh.write(f"{x!r},{phi!r},{rhos[i]!r}\n")
        else:
            fh.write(f"{x!r},{phi!r}\n")
