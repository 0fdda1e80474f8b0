"""Derivative ladders at the saddle point and the expansion coefficients.

Everything here is driven by Faa di Bruno's formula.  Partition tuples
``(m_1, ..., m_n)`` with ``sum j m_j = n`` index the terms; their integer
weights are computed exactly and only the final products are floating point.

Conventions: ``coeff_b`` follows the tail expansion

    P(N_t >= t x) ~ e^{-t I} sqrt(I''/(2 pi t)) / (1 - e^{-theta*}) (psi + b_1/t + ...),

so the raw triple sum (which already carries one factor ``1/(1 - e^{-theta*})``)
is multiplied back by ``1 - e^{-theta*}``.  ``coeff_b_raw`` returns the sum as is.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .cgf import (DEFAULT_HORIZON, DEFAULT_STEP, MAX_DOUBLINGS, GridFunction,
                  convolution_weights, solve_F, solve_x, tail_integral)
from .errors import HorizonExhaustedError, SingularSaddleError
from .kernel import Kernel
from .simulator import HawkesModel

DEFAULT_ORDER = 6


@dataclass(frozen=True)
class PartitionSet:
    n: int
    tuples: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)


@lru_cache(maxsize=None)
def partitions(n: int) -> PartitionSet:
    """All ``(m_1..m_n)`` with ``1 m_1 + 2 m_2 + ... + n m_n = n``.

    Ordered lexicographically from the largest ``m_1`` down, e.g. for n=3:
    (3,0,0), (1,1,0), (0,0,1).  n=0 gives the single empty tuple.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")

    def build(j: int, left: int):
        if j > n:
            if left == 0:
                yield ()
            return
        for m in range(left // j, -1, -1):
            for rest in build(j + 1, left - m * j):
                yield (m,) + rest

    return PartitionSet(n, tuple(build(1, n)))


@lru_cache(maxsize=None)
def fdb_denominator(m: tuple[int, ...]) -> int:
    """m_1! 1!^m_1 m_2! 2!^m_2 ... m_n! n!^m_n."""
    out = 1
    for j, mj in enumerate(m, start=1):
        out *= math.factorial(mj) * math.factorial(j) ** mj
    return out


def fdb_weight(m: tuple[int, ...]) -> int:
    """n! / (prod m_j! j!^m_j): the number of set partitions of block type m."""
    return math.factorial(len(m)) // fdb_denominator(m)


def double_factorial(k: int) -> int:
    """k!! with (-1)!! = 0!! = 1."""
    if k < -1:
        raise ValueError("double factorial undefined below -1")
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _monomial(m: tuple[int, ...], g: Sequence):
    """prod_j g[j]**m_j with g indexed from 1 (g[0] unused)."""
    out = 1
    for j, mj in enumerate(m, start=1):
        if mj:
            out = out * g[j] ** mj
    return out


def bell(n: int, g: Sequence, skip_top: bool = False):
    """d^n/dz^n exp(u(z)) / exp(u(z)) given ``g[j] = u^(j)``.

    With ``skip_top`` the tuple with ``m_n = 1`` (the term linear in ``g[n]``)
    is left out, which is what the self-referential recursions need.
    Works elementwise when the ``g[j]`` are arrays, and exactly for
    integers or Fractions.
    """
    total = 0
    for m in partitions(n):
        if skip_top and n > 0 and m[-1]:
            continue
        total = total + fdb_weight(m) * _monomial(m, g)
    return total


def _leibniz_rest(k: int, g: Sequence):
    """Known part of d^k/dz^k [e^z e^{u(z)}] / (e^z e^u), omitting the g[k] term."""
    out = bell(k, g, skip_top=True)
    for ell in range(k):
        out = out + math.comb(k, ell) * bell(ell, g)
    return out


def x_derivatives(theta_star: float, x_at_star: float, l1: float, K: int) -> list[float]:
    """[x, x', ..., x^(K)] at theta_star from the Leibniz/Faa di Bruno recursion.

    ``x(theta) = e^{theta - l1} e^{l1 x(theta)}``; differentiating k times and
    moving the ``l1 x^(k)`` term to the left-hand side gives
    ``x^(k) = x/(1 - l1 x) * [terms in x', ..., x^(k-1)]``.
    """
    if x_at_star * l1 >= 1.0 - 1e-12:
        raise SingularSaddleError("x(theta*) * ||h|| = 1: saddle point at theta_c")
    lead = x_at_star / (1.0 - l1 * x_at_star)
    xs = [x_at_star]
    g = [0.0]
    for k in range(1, K + 1):
        g_k = g + [0.0]  # g[k] is excluded by the recursion; placeholder
        xs.append(lead * _leibniz_rest(k, g_k))
        g.append(l1 * xs[k])
    return xs


def x_derivatives_closed(x: float, nu: float, l1: float) -> list[float]:
    """x'..x'''' at the saddle for level x in terms of r = ||h|| x / nu."""
    r, q = l1 * x / nu, x / nu
    return [q,
            (1 + r) ** 2 * q,
            (1 + r) ** 3 * (1 + 3 * r) * q,
            (1 + r) ** 4 * (1 + 10 * r + 15 * r * r) * q]


def F_derivatives(theta_star: float, F_grid: GridFunction, kernel: Kernel,
                  K: int) -> list[GridFunction]:
    """[F^(1), ..., F^(K)] in theta at theta_star on F's grid.

    Order k solves the linear Volterra equation
    ``F^(k) = F * (G^(k) + known terms in G^(1..k-1))`` where
    ``G^(j)(t) = int_0^t F^(j)(t - s) h(s) ds``, with the same product
    weights as F so each ladder is the exact theta-derivative of the discrete
    solution.
    """
    step = F_grid.step
    F = F_grid.values
    n = F.size - 1
    cw = convolution_weights(kernel, step, n)
    if np.any(cw.a0 * F >= 1.0):
        raise HorizonExhaustedError("grid too coarse for the derivative ladders")
    G: list[np.ndarray] = [np.zeros(n + 1)]
    out: list[GridFunction] = []
    for k in range(1, K + 1):
        known = _leibniz_rest(k, G + [np.zeros(n + 1)])
        known = np.broadcast_to(known, F.shape)
        Y = np.empty(n + 1)
        Gk = np.empty(n + 1)
        Y[0] = F[0] * known[0]
        Gk[0] = 0.0
        for i in range(1, n + 1):
            r = cw.rest(Y, i)
            Y[i] = F[i] * (r + known[i]) / (1.0 - cw.a0 * F[i])
            Gk[i] = r + cw.a0 * Y[i]
        if not np.all(np.isfinite(Y)):
            raise HorizonExhaustedError(f"derivative ladder of order {k} diverged")
        G.append(Gk)
        out.append(GridFunction(step, F_grid.horizon, Y))
    return out


def psi_derivatives(psi: float, nu: float, tail_integrals: Sequence[float], K: int) -> list[float]:
    """[psi, psi', ..., psi^(K)] from ``I_j = int_0^inf (F^(j) - x^(j))``.

    psi = exp(nu phi), so psi^(k) = psi * B_k(nu I_1, ..., nu I_k).
    """
    g = [0.0] + [nu * v for v in tail_integrals[:K]]
    return [psi] + [psi * bell(k, g) for k in range(1, K + 1)]


def _lam(eta: Sequence[float], j: int) -> float:
    return eta[j + 2] / ((j + 2) * (j + 1) * eta[2])


def _gauss_sum(k: int, order: int, psi: Sequence[float], eta: Sequence[float]) -> float:
    """sum over ell <= order of the inner (psi, eta) sum used in a_k and b_k."""
    lam = [0.0] + [_lam(eta, j) for j in range(1, order + 1)]
    total = 0.0
    for ell in range(order + 1):
        for m in partitions(ell):
            M = sum(m)
            c = Fraction((-1) ** (M + k) * double_factorial(2 * (k + M) - 1),
                         fdb_denominator(m) * math.factorial(order - ell))
            total += float(c) * psi[order - ell] * _monomial(m, lam)
    return total / eta[2] ** k


def coeff_a(psi: Sequence[float], eta: Sequence[float], k: int) -> float:
    """a_k of the local expansion P(N_t = t x).

    ``psi`` and ``eta`` are derivative lists at theta* (index = order); they
    must reach orders 2k and 2k + 2.
    """
    if k < 1:
        raise ValueError("k >= 1")
    if len(psi) < 2 * k + 1 or len(eta) < 2 * k + 3:
        raise ValueError(f"a_{k} needs psi to order {2 * k} and eta to order {2 * k + 2}")
    return _gauss_sum(k, 2 * k, psi, eta)


def _lattice_factor(m: tuple[int, ...], theta: float) -> float:
    M = sum(m)
    q = math.exp(-theta)
    sign = (-1) ** sum(j * mj for j, mj in enumerate(m, start=1))
    return sign * math.factorial(M) * q ** M * (1.0 - q) ** (-M - 1) / fdb_denominator(m)


def coeff_b_raw(theta: float, psi: Sequence[float], eta: Sequence[float], k: int) -> float:
    """The triple partition sum for b_k exactly as written (includes 1/(1-e^{-theta}))."""
    if k < 1:
        raise ValueError("k >= 1")
    if theta <= 0:
        raise ValueError("b_k needs theta* > 0: the tail expansion is undefined at the mean")
    if len(psi) < 2 * k + 1 or len(eta) < 2 * k + 3:
        raise ValueError(f"b_{k} needs psi to order {2 * k} and eta to order {2 * k + 2}")
    total = 0.0
    for n in range(2 * k + 1):
        outer = sum(_lattice_factor(m, theta) for m in partitions(n))
        total += outer * _gauss_sum(k, 2 * k - n, psi, eta)
    return total


def coeff_b(theta: float, psi: Sequence[float], eta: Sequence[float], k: int) -> float:
    """b_k in the normalisation of the tail expansion (see module docstring)."""
    return (1.0 - math.exp(-theta)) * coeff_b_raw(theta, psi, eta, k)


def a1_closed(psi: Sequence[float], eta: Sequence[float]) -> float:
    """Explicit a_1 (third- and fourth-order saddle-point correction)."""
    p0, p1, p2 = psi[:3]
    e2, e3, e4 = eta[2:5]
    return (-0.5 * p2 / e2 + (p0 * e4 * 3 + 4 * p1 * e3 * 3) / (24 * e2 ** 2)
            - 15.0 / 72.0 * p0 * e3 ** 2 / e2 ** 3)


def b1_closed(theta: float, psi: Sequence[float], eta: Sequence[float]) -> float:
    """Explicit b_1 in the tail-expansion normalisation."""
    p0, p1, p2 = psi[:3]
    e2, e3, e4 = eta[2:5]
    q = math.exp(-theta)
    L = 1.0 - q
    return (-p0 * 0.5 * (q + q * q) / L ** 2 / e2
            - 0.5 * p2 / e2
            + p0 * (e4 * 3.0 / (24.0 * e2 ** 2) - 0.5 * e3 ** 2 * 15.0 / (36.0 * e2 ** 3))
            + q / L * p1 / e2
            + p1 * e3 * 3.0 / (6.0 * e2 ** 2)
            - q / L * p0 * e3 * 3.0 / (6.0 * e2 ** 2))


@dataclass(frozen=True, eq=False)
class ExpansionContext:
    level: float
    nu: float
    theta_star: float
    x_derivs: list[float]
    eta_derivs: list[float]
    F_derivs: list[GridFunction] = field(repr=False)
    psi_derivs: list[float]
    a: list[float]
    b: list[float]

    @property
    def psi(self) -> float:
        return self.psi_derivs[0]

    @property
    def c0(self) -> float:
        return self.psi / (1.0 - math.exp(-self.theta_star))

    @property
    def c1(self) -> float:
        return self.b[0] / (1.0 - math.exp(-self.theta_star))

    def to_dict(self) -> dict:
        return {"level": self.level, "nu": self.nu, "theta_star": self.theta_star,
                "x_derivs": list(self.x_derivs), "eta_derivs": list(self.eta_derivs),
                "psi_derivs": list(self.psi_derivs), "a": list(self.a), "b": list(self.b),
                "c0": self.c0 if self.theta_star > 0 else None,
                "c1": self.c1 if self.b else None,
                "F_derivs_end": [float(g.values[-1]) for g in self.F_derivs],
                "step": self.F_derivs[0].step if self.F_derivs else None,
                "horizon": self.F_derivs[0].horizon if self.F_derivs else None}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _ladder_integrals(theta: float, model: HawkesModel, xs: list[float], n_psi: int,
                      step: float, horizon: float):
    """Solve F and its ladders, returning (F grids, [phi, I_1..I_n])."""
    for _ in range(MAX_DOUBLINGS + 1):
        grid = solve_F(theta, model.kernel, step, horizon)
        ladders = [grid] + F_derivatives(theta, grid, model.kernel, n_psi)
        vals = [tail_integral(g.values, step, xs[j], kernel=model.kernel)
                for j, g in enumerate(ladders)]
        if all(v is not None for v in vals):
            return ladders, vals
        horizon *= 2.0
    raise HorizonExhaustedError(f"ladder tails did not settle by T={horizon / 2}")


def build_context(model: HawkesModel, x: float, K: int = DEFAULT_ORDER,
                  step: float = DEFAULT_STEP, horizon: float = DEFAULT_HORIZON,
                  x4_weight: int = 4) -> ExpansionContext:
    """Saddle point, ladders to order K and a_k, b_k for k <= (K - 2) // 2.

    psi is differentiated to order K - 2 (the a_k/b_k sums need psi to 2k and
    eta to 2k + 2).

    ``x4_weight`` is the multinomial weight of the (1 + ||h|| x') ||h|| x'''
    term in x''''.  Faa di Bruno gives 4; passing 3 reproduces published
    numbers that were computed with that weight.  Only x'''' and eta''''
    change; the psi ladders always use the exact x''''.
    """
    from .deviations import theta_star as _theta_star

    if K < 2:
        raise ValueError("K >= 2")
    nu, l1 = model.nu, model.l1
    th = _theta_star(x, nu, l1)
    x_star = solve_x(th, l1) if th != 0 else 1.0
    xs = x_derivatives(th, x_star, l1, K)
    eta = [nu * (x_star - 1.0)] + [nu * v for v in xs[1:]]
    n_psi = K - 2
    ladders, vals = _ladder_integrals(th, model, xs, n_psi, step, horizon)
    if x4_weight != 4 and K >= 4:
        lead = x_star / (1.0 - l1 * x_star)
        xs = list(xs)
        xs[4] -= (4 - x4_weight) * lead * (1.0 + l1 * xs[1]) * l1 * xs[3]
        eta[4] = nu * xs[4]
    psi0 = math.exp(nu * vals[0])
    psis = psi_derivatives(psi0, nu, vals[1:], n_psi)
    kmax = n_psi // 2
    a = [coeff_a(psis, eta, k) for k in range(1, kmax + 1)]
    b = [coeff_b(th, psis, eta, k) for k in range(1, kmax + 1)] if th > 0 else []
    return ExpansionContext(x, nu, th, xs, eta, ladders[1:], psis, a, b)
