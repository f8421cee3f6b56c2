import math

import numpy as np
import pytest
from scipy.integrate import quad

import fucik.spectral as spectral
from fucik import NEUMANN, Problem, ToleranceConfig, constant, eigenvalue, parse
from fucik.eigen import const_eigenvalue
from fucik.parallel import Failed, fan_out, worker_count
from fucik.spectral import (
    QuadratureError,
    adaptive_simpson,
    asymptotic_count,
    asymptotic_eigenvalue,
    bracketing_counts,
    bracketing_defect,
    campanato_seminorm,
    count,
    remainder_rate,
    trace_curve,
    weyl_integral,
)
from fucik.tables import TABLE3

PI = math.pi


# -- counting ----------------------------------------------------------------------


def test_count_unit_examples(unit):
    res = count(unit, 4 * PI**2 + 0.1, 1.0)
    assert (res.n_plus, res.n_minus, res.total) == (2, 2, 4)
    assert count(unit, 0.5, 1.0).total == 0


def test_count_at_published_value(reference):
    lam = 106.483 + 0.01
    res = count(reference, lam, 1.0)
    oracle = sum(
        1 for sign in "+-" for k in range(1, 12) if eigenvalue(reference, k, 1.0, sign).lam <= lam
    )
    assert res.total == oracle
    assert res.total >= 8


@pytest.mark.parametrize("t", [0.4, 1.0, 6.0])
def test_count_matches_eigenvalue_solves(reference, t):
    eigs = sorted(eigenvalue(reference, k, t, s).lam for s in "+-" for k in range(1, 11))
    top = eigs[-1]
    # midpoints between consecutive eigenvalues avoid ties
    probes = [0.5 * (a + b) for a, b in zip(eigs, eigs[1:]) if b - a > 1e-3]
    prev = 0
    for lam in probes:
        total = count(reference, lam, t).total
        expected = sum(1 for e in eigs if e <= lam)
        assert total == expected
        assert total >= prev
        prev = total
    assert count(reference, eigs[0] * 0.99, t).total == 0
    assert top > probes[-1]


def test_count_rejects_bad_input(unit):
    with pytest.raises(ValueError):
        count(unit, -1.0, 1.0)
    with pytest.raises(ValueError):
        count(unit, 1.0, 0.0)


# -- bracketing ----------------------------------------------------------------------


def test_dirichlet_neumann_subinterval_counts():
    # on [0, c] with u(0) = 0, u'(c) = 0 and unit weights: lambda_j = ((2j - 1) pi / (2c))^2
    p = Problem(L=1.0, m=constant(1.0), n=constant(1.0))
    c = 0.3
    left = p.sub(0.0, c, "dirichlet", NEUMANN)
    for lam in (20.0, 300.0, 2000.0):
        expected = sum(1 for j in range(1, 200) if ((2 * j - 1) * PI / (2 * c)) ** 2 <= lam)
        assert count(left, lam, 1.0).total == 2 * expected
    right = p.sub(c, 1.0, NEUMANN, "dirichlet")
    for lam in (20.0, 300.0):
        expected = sum(1 for j in range(1, 200) if ((2 * j - 1) * PI / (2 * (1 - c))) ** 2 <= lam)
        assert count(right, lam, 1.0).total == 2 * expected


def test_bracketing_examples(unit, reference):
    assert -9 <= bracketing_defect(unit, 100.0, 1.0, 0.5) <= 11
    assert bracketing_defect(reference, 1.0, 1.0, 0.5) == 0
    res = bracketing_counts(reference, 1e4, 30.0, 0.3)
    assert res.defect == res.whole - res.left - res.right
    assert -9 <= res.defect <= 11


@pytest.mark.parametrize("c", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("t", [0.5, 1.0, 30.0])
def test_bracketing_bound(reference, c, t):
    for lam in np.geomspace(1.0, 1e4, 12):
        assert abs(bracketing_defect(reference, float(lam), t, c)) <= 11


def test_bracketing_rejects_cut_outside(unit):
    for c in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            bracketing_defect(unit, 10.0, 1.0, c)


# -- curves ----------------------------------------------------------------------------


@pytest.mark.parametrize("k, sign", [(1, "+"), (2, "-"), (5, "+"), (6, "-")])
def test_constant_weight_curve_closed_form(k, sign):
    p = Problem(L=1.0, m=constant(1.5), n=constant(0.8))
    ts = list(np.geomspace(0.01, 100, 9))
    curve = trace_curve(p, k, sign, ts)
    assert not curve.failures
    for t, a, b in curve.points:
        exact = const_eigenvalue(1.5, 0.8, 1.0, k, t, sign)
        assert abs(a - exact) <= 1e-4
        assert b == pytest.approx(t * a, rel=1e-15)


def test_constant_weight_curve_is_hyperbola():
    # C_2: pi / sqrt(alpha) + pi / sqrt(beta) = 1 for unit weights on [0, 1]
    p = Problem(L=1.0, m=constant(1.0), n=constant(1.0))
    curve = trace_curve(p, 2, "+", [0.1, 0.5, 1.0, 3.0, 20.0], ToleranceConfig(bisection_eps=1e-10))
    for _, a, b in curve.points:
        assert PI / math.sqrt(a) + PI / math.sqrt(b) == pytest.approx(1.0, abs=1e-8)


def test_reference_curve_shape(reference):
    ts = [10.0**e for e in range(-5, 6)]
    curve = trace_curve(reference, 4, "+", ts)
    alphas = [a for _, a, _ in curve.points]
    betas = [b for _, _, b in curve.points]
    assert all(x > y for x, y in zip(alphas, alphas[1:]))
    assert all(x < y for x, y in zip(betas, betas[1:]))


def test_curve_reports_failures_per_point(unit, monkeypatch):
    real = spectral.eigenvalue

    def flaky(problem, k, t, sign, tol=None):
        if t == 2.0:
            raise RuntimeError("boom")
        return real(problem, k, t, sign, tol)

    monkeypatch.setattr(spectral, "eigenvalue", flaky)
    curve = trace_curve(unit, 1, "+", [1.0, 2.0, 3.0], workers=1)
    assert [p[0] for p in curve.points] == [1.0, 3.0]
    assert curve.failures == [(2.0, "boom")]


def test_curve_validation(unit):
    with pytest.raises(ValueError):
        trace_curve(unit, 1, "+", [2.0, 1.0])
    with pytest.raises(ValueError):
        trace_curve(unit, 1, "+", [-1.0, 1.0])
    with pytest.raises(ValueError):
        trace_curve(unit, 1, "x", [1.0])


# -- quadrature and Weyl ------------------------------------------------------------------


@pytest.mark.parametrize(
    "f, a, b",
    [(math.sin, 0.0, PI), (lambda x: math.exp(-x * x), -3.0, 2.0), (lambda x: math.sqrt(x), 0.0, 1.0), (lambda x: 1 / (1 + 25 * x * x), -1, 1)],
)
def test_adaptive_simpson_against_quad(f, a, b):
    value, err = adaptive_simpson(f, a, b, 1e-11)
    ref = quad(f, a, b, epsabs=1e-13, epsrel=1e-13)[0]
    assert value == pytest.approx(ref, abs=1e-9)
    assert err < 1e-8


def test_adaptive_simpson_cap():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: math.sin(1 / x) if x else 0.0, 0.0, 1.0, 1e-14, max_intervals=50)


def test_weyl_integral_examples(unit, reference):
    assert weyl_integral(unit, 1.0).integral == pytest.approx(0.5, rel=1e-14)
    assert weyl_integral(unit, 4.0).integral == pytest.approx(2.0 / 3.0, rel=1e-14)
    # inverted from the first printed asymptotic value at t = 30
    inverted = PI * 10 / (2 * math.sqrt(211.144))
    assert inverted == pytest.approx(1.0811, abs=1e-4)
    assert weyl_integral(reference, 30.0).integral == pytest.approx(inverted, rel=1e-3)


@pytest.mark.parametrize("t", [0.1, 1.0, 30.0, 1e4])
def test_weyl_integral_against_quad(reference, t):
    f = lambda x: 1 / ((1 + 1 / (x + 1)) ** -0.5 + (t * (1 + math.cos(2 * x) ** 2)) ** -0.5)  # noqa: E731
    ref = quad(f, 0, 1, epsabs=1e-13, epsrel=1e-13)[0]
    assert weyl_integral(reference, t).integral == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("t", [0.5, 30.0])
def test_weyl_integral_halving_tolerance(reference, t):
    coarse = weyl_integral(reference, t, quad_tol=1e-6)
    fine = weyl_integral(reference, t, quad_tol=5e-7)
    assert abs(coarse.integral - fine.integral) <= max(coarse.quadrature_error, 1e-15)


def test_asymptotic_eigenvalue_examples(unit, reference):
    assert asymptotic_eigenvalue(reference, 10, 30.0) == pytest.approx(211.144, rel=1e-3)
    for k in (2, 4, 10):
        assert asymptotic_eigenvalue(unit, k, 1.0) == pytest.approx(const_eigenvalue(1, 1, 1, k, 1, "+"), rel=1e-13)


@pytest.mark.xfail(strict=True, reason="the printed table puts this asymptotic value in the numeric column")
def test_asymptotic_eigenvalue_published_k28(reference):
    assert asymptotic_eigenvalue(reference, 28, 1.0) == pytest.approx(5124.467, rel=1e-3)


def test_asymptotic_values_reproduce_the_other_column(reference):
    for t, printed_numeric, _, _ in TABLE3:
        assert asymptotic_eigenvalue(reference, 28, t) == pytest.approx(printed_numeric, rel=1e-6)


def test_classical_weyl_formula_for_equal_weights():
    p = Problem.from_text("1+1/(x+1)", "1+1/(x+1)")
    root = quad(lambda x: math.sqrt(1 + 1 / (x + 1)), 0, 1, epsabs=1e-13)[0]
    classical = (PI * 50 / root) ** 2
    assert asymptotic_eigenvalue(p, 50, 1.0) == pytest.approx(classical, rel=1e-10)
    assert eigenvalue(p, 50, 1.0, "+").lam == pytest.approx(classical, rel=1e-2)


def test_asymptotic_count_examples(unit, reference):
    assert asymptotic_count(unit, 4 * PI**2, 1.0) == pytest.approx(4.0, rel=1e-13)
    assert asymptotic_count(unit, 1e-12, 1.0) < 1e-5
    assert asymptotic_count(unit, 0.0, 1.0) == 0.0
    lam = 106.483
    assert abs(asymptotic_count(reference, lam, 1.0) - count(reference, lam, 1.0).total) <= 2


@pytest.mark.parametrize("t", [1.0, 30.0])
def test_weyl_counting_ratio(reference, t):
    lam = 1e5
    ratio = count(reference, lam, t).total / asymptotic_count(reference, lam, t)
    assert abs(ratio - 1) < 0.02


# -- Campanato ----------------------------------------------------------------------------


def test_campanato_constant_is_zero():
    for gamma in (0.5, 1.0, 2.0):
        assert campanato_seminorm(constant(2.5), 1.0, gamma, 6) < 1e-12


def test_campanato_linear_weight():
    # the integral of |x - mid| over I is |I|^2 / 4 on every interval
    assert campanato_seminorm(parse("x"), 1.0, 2.0, 8) == pytest.approx(0.25, rel=1e-12)
    assert campanato_seminorm(parse("x"), 1.0, 1.0, 8) == pytest.approx(0.25, rel=1e-12)
    assert campanato_seminorm(parse("3*x+1"), 2.0, 2.0, 5) == pytest.approx(0.75, rel=1e-12)


def test_campanato_stable_in_depth():
    w = parse("1+cos(2*x)^2")
    a = campanato_seminorm(w, 1.0, 1.5, 10)
    b = campanato_seminorm(w, 1.0, 1.5, 12)
    assert a > 0
    assert b == pytest.approx(a, rel=0.02)


def test_campanato_against_quad():
    f = lambda x: 1 + math.cos(2 * x) ** 2  # noqa: E731
    gamma, depth = 1.5, 3
    best = 0.0
    for level in range(depth + 1):
        edges = np.linspace(0, 1, 2**level + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            mean = quad(f, a, b, epsabs=1e-14)[0] / (b - a)
            dev = quad(lambda x: abs(f(x) - mean), a, b, epsabs=1e-14, limit=200)[0]
            best = max(best, dev / (b - a) ** gamma)
    assert campanato_seminorm(parse("1+cos(2*x)^2"), 1.0, gamma, depth) == pytest.approx(best, rel=1e-9)


def test_campanato_validation():
    with pytest.raises(ValueError):
        campanato_seminorm(parse("x+1"), 1.0, 0.0, 4)
    with pytest.raises(ValueError):
        campanato_seminorm(parse("x+1"), 1.0, 1.0, 0)


# -- remainder -------------------------------------------------------------------------------


def test_remainder_exact_for_even_k():
    p = Problem(L=1.0, m=constant(1.0), n=constant(1.0))
    fit = remainder_rate(p, 4.0, [2, 4, 8, 16], ToleranceConfig(bisection_eps=1e-9))
    assert fit.exact
    assert fit.slope is None
    assert max(fit.r) < 1e-8


def test_remainder_odd_k_decays_like_one_over_k():
    p = Problem(L=1.0, m=constant(1.0), n=constant(1.0))
    ks = [5, 11, 21, 41, 81]
    fit = remainder_rate(p, 4.0, ks, ToleranceConfig(bisection_eps=1e-9))
    closed = [1 - (3 * k) ** 2 / (3 * k + 1) ** 2 for k in ks]
    np.testing.assert_allclose(fit.r, closed, rtol=1e-6)
    assert not fit.exact
    assert fit.slope == pytest.approx(-1.0, abs=0.05)


def test_remainder_decreasing_for_reference_weights(reference):
    fit = remainder_rate(reference, 30.0, [10, 20, 40, 80])
    assert all(a > b for a, b in zip(fit.r, fit.r[1:]))
    assert fit.slope is not None and fit.slope < 0


def test_remainder_validation(unit):
    with pytest.raises(ValueError):
        remainder_rate(unit, 1.0, [2, 4, 6])
    with pytest.raises(ValueError):
        remainder_rate(unit, 1.0, [2, 4, 4, 6])


# -- fan-out -----------------------------------------------------------------------------


def _square_or_fail(x):
    if x == 3:
        raise ValueError("three")
    return x * x


def test_fan_out_order_and_failures():
    for workers in (1, 2):
        out = fan_out(_square_or_fail, range(6), workers)
        assert [o for i, o in enumerate(out) if i != 3] == [0, 1, 4, 16, 25]
        assert isinstance(out[3], Failed) and str(out[3].error) == "three"


def test_parallel_results_identical(reference):
    ts = [0.2, 1.0, 5.0]
    seq = trace_curve(reference, 3, "-", ts, workers=1)
    par = trace_curve(reference, 3, "-", ts, workers=2)
    assert seq.points == par.points


def test_worker_count(monkeypatch):
    monkeypatch.setenv("FUCIK_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("FUCIK_THREADS", "0")
    assert worker_count() >= 1
    assert worker_count(2) == 2
    monkeypatch.setenv("FUCIK_THREADS", "many")
    with pytest.raises(ValueError):
        worker_count()
    with pytest.raises(ValueError):
        worker_count(-1)
