"""Standalone SVG rendering of the first curves of the spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .eigen import linear_eigenvalue
from .prufer import Problem, ToleranceConfig
from .spectral import SpectrumCurve, trace_curve

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]
MARGIN = (60, 20, 30, 50)  # left, right, top, bottom


@dataclass(frozen=True)
class PlotSpec:
    k_max: int = 6
    signs: tuple[str, ...] = ("+", "-")
    t_grid: tuple[float, ...] = tuple(np.logspace(-3, 3, 61))
    alpha_max: float = 300.0
    beta_max: float = 300.0
    width: int = 640
    height: int = 640

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not self.t_grid:
            raise ValueError("t grid is empty")
        if not (self.alpha_max > 0 and self.beta_max > 0):
            raise ValueError("axis ranges must be positive")
        if self.width < 100 or self.height < 100:
            raise ValueError("image must be at least 100x100 pixels")
        if not set(self.signs) <= {"+", "-"} or not self.signs:
            raise ValueError("signs must be a non-empty subset of {'+', '-'}")


@dataclass
class PlotData:
    curves: list[SpectrumCurve] = field(default_factory=list)
    lam1_m: float = math.nan
    lam1_n: float = math.nan


def build_plot_data(problem: Problem, spec: PlotSpec, tol: ToleranceConfig | None = None, workers=None) -> PlotData:
    data = PlotData(
        lam1_m=linear_eigenvalue(problem.m, problem.L, 1, tol),
        lam1_n=linear_eigenvalue(problem.n, problem.L, 1, tol),
    )
    ts = sorted(spec.t_grid)
    for k in range(1, spec.k_max + 1):
        for sign in spec.signs:
            data.curves.append(trace_curve(problem, k, sign, ts, tol, workers))
    return data


def _ticks(vmax: float, n: int = 5) -> list[float]:
    raw = vmax / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    return [i * step for i in range(int(vmax / step) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(data: PlotData, spec: PlotSpec, title: str = "") -> str:
    left, right, top, bottom = MARGIN
    pw = spec.width - left - right
    ph = spec.height - top - bottom

    def sx(a):
        return left + a / spec.alpha_max * pw

    def sy(b):
        return top + ph - b / spec.beta_max * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<defs><clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath></defs>',
    ]
    if title:
        out.append(f'<text x="{spec.width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    # axes and ticks
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for a in _ticks(spec.alpha_max):
        x = sx(a)
        out.append(f'<line x1="{_fmt(x)}" y1="{top + ph}" x2="{_fmt(x)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{top + ph + 18}" text-anchor="middle">{a:g}</text>')
    for b in _ticks(spec.beta_max):
        y = sy(b)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(y)}" x2="{left}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end">{b:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{spec.height - 10}" text-anchor="middle">alpha</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {top + ph / 2:.1f})">beta</text>')

    out.append('<g clip-path="url(#plot)">')
    # trivial curves: alpha = lambda_1(m), beta = lambda_1(n)
    if math.isfinite(data.lam1_m):
        x = sx(data.lam1_m)
        out.append(f'<line x1="{_fmt(x)}" y1="{top}" x2="{_fmt(x)}" y2="{top + ph}" stroke="gray" stroke-dasharray="4 3"/>')
    if math.isfinite(data.lam1_n):
        y = sy(data.lam1_n)
        out.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{left + pw}" y2="{_fmt(y)}" stroke="gray" stroke-dasharray="4 3"/>')
    for curve in data.curves:
        if len(curve.points) < 2:
            continue
        color = PALETTE[(curve.k - 1) % len(PALETTE)]
        dash = "" if curve.sign == "+" else ' stroke-dasharray="6 2"'
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for _, a, b in curve.points)
        out.append(
            f'<polyline data-k="{curve.k}" data-sign="{curve.sign}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"{dash} points="{pts}"/>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
