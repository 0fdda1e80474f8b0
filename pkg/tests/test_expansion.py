import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hawkestail.cgf import compute_psi, solve_F, solve_x, theta_critical
from hawkestail.deviations import theta_star
from hawkestail.errors import SingularSaddleError
from hawkestail.expansion import (a1_closed, b1_closed, bell, build_context, coeff_a, coeff_b,
                                  coeff_b_raw, double_factorial, fdb_weight, partitions,
                                  psi_derivatives, x_derivatives, x_derivatives_closed)
from hawkestail.kernel import ExponentialKernel, PowerLawKernel
from hawkestail.simulator import HawkesModel

from oracles import (X4_AS_PRINTED_AT_4, X_DERIVS_AT_4, brute_partitions, mp_x_derivs,
                     partition_count, richardson_derivative, x4_as_printed)

EXP = ExponentialKernel(1.0, 2.0)
POW = PowerLawKernel(1.0, 3.0)
MODELS = {"exp": HawkesModel(1.0, EXP), "powerlaw": HawkesModel(1.0, POW)}


@pytest.fixture(scope="module")
def contexts():
    return {k: build_context(m, 4.0) for k, m in MODELS.items()}


# partitions and combinatorics -------------------------------------------------

def test_partition_examples():
    assert partitions(0).tuples == ((),)
    assert partitions(3).tuples == ((3, 0, 0), (1, 1, 0), (0, 0, 1))
    assert len(partitions(4)) == 5


@pytest.mark.parametrize("n", range(0, 11))
def test_partitions_are_complete_and_ordered(n):
    ps = partitions(n).tuples
    assert len(ps) == partition_count(n)
    assert set(ps) == brute_partitions(n)
    assert list(ps) == sorted(ps, reverse=True)


def test_set_partition_counts_sum_to_bell_numbers():
    bell_numbers = [1, 1, 2, 5, 15, 52, 203, 877]
    for n, b in enumerate(bell_numbers):
        assert sum(fdb_weight(m) for m in partitions(n)) == b


@pytest.mark.parametrize("c", [1, Fraction(5, 2)])
def test_exponential_linear_inner_exact(c):
    for n in range(7):
        g = [0, c] + [0] * n
        assert bell(n, g) == c ** n


def test_bell_matches_mpmath_for_nonlinear_inner():
    z = 0.7
    g = [0.0] + [float(mpmath.diff(mpmath.sin, z, j)) for j in range(1, 7)]
    for n in range(7):
        ref = float(mpmath.diff(lambda u: mpmath.exp(mpmath.sin(u)), z, n)) / math.exp(math.sin(z))
        assert bell(n, g) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_double_factorial():
    assert [double_factorial(k) for k in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]


# x ladder ----------------------------------------------------------------------

def test_x_derivatives_reference_values():
    th = theta_star(4.0, 1.0, 0.5)
    xs = x_derivatives(th, 4 / 3, 0.5, 4)
    for got, ref in zip(xs[1:], X_DERIVS_AT_4):
        assert got == pytest.approx(ref, rel=1e-10)


def test_x_fourth_derivative_differs_from_printed_display():
    # the printed display gives the (1 + ||h|| x') ||h|| x''' term weight 3
    assert x4_as_printed(4.0, 1.0, 0.5) == pytest.approx(X4_AS_PRINTED_AT_4)
    assert x_derivatives_closed(4.0, 1.0, 0.5)[3] == pytest.approx(X_DERIVS_AT_4[3])


@given(st.floats(0.1, 0.9), st.floats(0.05, 0.9))
@settings(max_examples=25, deadline=None)
def test_x_derivatives_match_mpmath(l1, frac):
    th = frac * theta_critical(l1)
    xs = x_derivatives(th, solve_x(th, l1), l1, 5)
    ref = mp_x_derivs(th, l1, 5)
    for got, r in zip(xs, ref):
        assert got == pytest.approx(r, rel=1e-7)


@given(st.floats(0.1, 0.9), st.floats(0.3, 3.0), st.floats(1.2, 4.0))
@settings(max_examples=50, deadline=None)
def test_x_derivatives_match_closed_forms(l1, nu, ratio):
    x = ratio * nu / (1 - l1)
    th = theta_star(x, nu, l1)
    xs = x_derivatives(th, x / (nu + l1 * x), l1, 4)
    for got, ref in zip(xs[1:], x_derivatives_closed(x, nu, l1)):
        assert got == pytest.approx(ref, rel=1e-10)


def test_x_derivatives_finite_differences():
    th = theta_star(4.0, 1.0, 0.5)
    xs = x_derivatives(th, 4 / 3, 0.5, 4)
    for k in range(1, 5):
        fd = richardson_derivative(lambda s: solve_x(s, 0.5), th, k, 4e-3)
        assert fd == pytest.approx(xs[k], rel=1e-4)


def test_singular_saddle():
    with pytest.raises(SingularSaddleError):
        x_derivatives(theta_critical(0.5), 2.0, 0.5, 3)


# F ladders -------------------------------------------------------------------

@pytest.mark.parametrize("name", ["exp", "powerlaw"])
def test_F_ladder_start_and_limit(contexts, name):
    ctx = contexts[name]
    assert ctx.F_derivs[0].values[0] == pytest.approx(math.exp(ctx.theta_star))
    tol = 1e-9 if name == "exp" else 5e-3  # power-law kernels converge like H(T)
    for k in (1, 2):
        assert ctx.F_derivs[k - 1].values[-1] == pytest.approx(ctx.x_derivs[k], rel=tol)


def test_F_ladder_limit_powerlaw_long_horizon():
    ctx = build_context(MODELS["powerlaw"], 4.0, K=4, step=0.02, horizon=400.0)
    for k in (1, 2):
        assert ctx.F_derivs[k - 1].values[-1] == pytest.approx(ctx.x_derivs[k], rel=1e-4)


@pytest.mark.parametrize("k", [EXP, POW])
def test_F_first_derivative_at_zero_solves_renewal_equation(k):
    from hawkestail.expansion import F_derivatives
    grid = solve_F(0.0, k, 0.02, 400.0)
    m = F_derivatives(0.0, grid, k, 1)[0]
    assert m.values[-1] == pytest.approx(2.0, rel=1e-4)


@pytest.mark.parametrize("name", ["exp", "powerlaw"])
def test_F_ladders_match_finite_differences(contexts, name):
    ctx = contexts[name]
    kern = MODELS[name].kernel
    for k in range(1, 5):
        fd = richardson_derivative(lambda s: solve_F(s, kern, 0.01, 20.0).at(7.0),
                                   ctx.theta_star, k, 4e-3)
        assert fd == pytest.approx(ctx.F_derivs[k - 1].at(7.0), rel=1e-4)


# psi ladders ------------------------------------------------------------------

@pytest.mark.parametrize("name", ["exp", "powerlaw"])
def test_psi_ladders_match_finite_differences(contexts, name):
    ctx = contexts[name]
    m = MODELS[name]
    for k in range(1, 5):
        fd = richardson_derivative(lambda s: compute_psi(s, m), ctx.theta_star, k, 4e-3)
        assert fd == pytest.approx(ctx.psi_derivs[k], rel=1e-4)


@pytest.mark.parametrize("name", ["exp", "powerlaw"])
def test_psi_first_derivative_central_difference(contexts, name):
    ctx = contexts[name]
    m = MODELS[name]
    h = 1e-4
    fd = (compute_psi(ctx.theta_star + h, m) - compute_psi(ctx.theta_star - h, m)) / (2 * h)
    assert fd == pytest.approx(ctx.psi_derivs[1], rel=1e-5)


def test_psi_derivatives_structure():
    out = psi_derivatives(2.0, 0.5, [1.0, 3.0], 2)
    assert out[1] == pytest.approx(2.0 * 0.5 * 1.0)
    assert out[2] == pytest.approx(2.0 * (0.5 * 3.0 + 0.25))


def test_psi_at_theta_zero_is_one():
    ctx = build_context(MODELS["exp"], 2.0, K=4)
    assert ctx.theta_star == 0.0
    assert ctx.psi == pytest.approx(1.0)
    assert ctx.b == []


# coefficients -----------------------------------------------------------------

psi_lists = st.lists(st.floats(-5, 5), min_size=3, max_size=3).map(lambda v: [abs(v[0]) + 0.1] + v[1:])
eta_lists = st.lists(st.floats(0.1, 50), min_size=5, max_size=5)


@given(psi_lists, eta_lists)
@settings(max_examples=200, deadline=None)
def test_a1_general_equals_closed_form(psi, eta):
    assert coeff_a(psi, eta, 1) == pytest.approx(a1_closed(psi, eta), rel=1e-10, abs=1e-12)


@given(st.floats(0.01, 3.0), psi_lists, eta_lists)
@settings(max_examples=200, deadline=None)
def test_b1_general_equals_closed_form(theta, psi, eta):
    got = coeff_b(theta, psi, eta, 1)
    assert got == pytest.approx(b1_closed(theta, psi, eta), rel=1e-10, abs=1e-10)
    assert coeff_b_raw(theta, psi, eta, 1) == pytest.approx(got / (1 - math.exp(-theta)), rel=1e-12)


def test_a1_vanishes_for_gaussian_cumulant():
    assert coeff_a([1.0, 0.0, 0.0], [0.0, 0.0, 3.0, 0.0, 0.0], 1) == 0.0


@pytest.mark.parametrize("x", [0.5, 2.0, 7.0])
def test_a_coefficients_reproduce_stirling(x):
    # Poisson: psi = 1, every eta derivative equals x at the saddle;
    # 1/n! = e^n n^-n / sqrt(2 pi n) (1 - 1/(12 n) + 1/(288 n^2) + ...)
    psi = [1.0] + [0.0] * 4
    eta = [0.0] + [x] * 6
    assert coeff_a(psi, eta, 1) == pytest.approx(-1 / (12 * x), rel=1e-12)
    assert coeff_a(psi, eta, 2) == pytest.approx(1 / (288 * x * x), rel=1e-12)


def test_b_coefficients_reproduce_poisson_tail():
    x, lam = 3.0, 1.0
    th = math.log(x / lam)
    psi = [1.0] + [0.0] * 4
    eta = [0.0] + [x] * 6
    b1, b2 = coeff_b(th, psi, eta, 1), coeff_b(th, psi, eta, 2)

    def resid(t):
        n = round(t * x)
        rate = x * math.log(x / lam) - x + lam
        pref = math.exp(-t * rate) * math.sqrt(1 / (x * 2 * math.pi * t)) / (1 - math.exp(-th))
        exact = stats.poisson.sf(n - 1, lam * t)
        return exact / pref - 1.0

    for t in (200.0, 400.0):
        assert t * resid(t) == pytest.approx(b1, abs=3.0 * abs(b2) / t)
        assert t * t * (resid(t) - b1 / t) == pytest.approx(b2, rel=0.05)


def test_coeff_b_needs_positive_theta():
    with pytest.raises(ValueError):
        coeff_b(0.0, [1, 0, 0], [0, 0, 1, 0, 0], 1)


def test_coefficients_need_deep_enough_ladders():
    with pytest.raises(ValueError):
        coeff_a([1.0, 0.0], [0, 0, 1, 0, 0], 1)


# context -----------------------------------------------------------------------

@pytest.mark.parametrize("name", ["exp", "powerlaw"])
def test_context_invariants(contexts, name):
    ctx = contexts[name]
    assert ctx.eta_derivs[2] > 0
    for k in range(1, len(ctx.x_derivs)):
        assert ctx.eta_derivs[k] == ctx.nu * ctx.x_derivs[k]
    assert len(ctx.a) == len(ctx.b) == 2
    assert ctx.a[0] == pytest.approx(a1_closed(ctx.psi_derivs, ctx.eta_derivs), rel=1e-10)


def test_context_json(contexts):
    d = json.loads(contexts["exp"].to_json())
    assert d["theta_star"] == pytest.approx(0.1210154, abs=1e-7)
    assert d["x_derivs"][1] == pytest.approx(4.0)
    assert np.isfinite(d["b"]).all()


def test_exp_reference_constants(contexts):
    ctx = contexts["exp"]
    assert ctx.psi == pytest.approx(0.74306, abs=2e-5)
    five = build_context(MODELS["exp"], 5.0)
    assert five.c0 == pytest.approx(4.788, abs=2e-3)


def test_x4_weight_reproduces_printed_fourth_derivative():
    ctx = build_context(MODELS["exp"], 4.0, x4_weight=3)
    assert ctx.x_derivs[4] == pytest.approx(X4_AS_PRINTED_AT_4, rel=1e-10)
    assert ctx.eta_derivs[4] == pytest.approx(X4_AS_PRINTED_AT_4, rel=1e-10)
