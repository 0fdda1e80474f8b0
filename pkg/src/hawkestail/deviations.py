"""Rate function, saddle point and the precise LDP / CLT / MDP tail formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.special import ndtr

from .cgf import DEFAULT_HORIZON, DEFAULT_STEP
from .errors import LatticeError
from .expansion import DEFAULT_ORDER, ExpansionContext, build_context
from .simulator import HawkesModel

LATTICE_TOL = 1e-9


def _check_level(x: float) -> None:
    if not x > 0:
        raise ValueError("level x must be positive")


def theta_star(x: float, nu: float, l1: float) -> float:
    """I'(x) = log(x/(nu + l1 x)) - l1 x/(nu + l1 x) + l1."""
    _check_level(x)
    d = nu + l1 * x
    return math.log(x / d) - l1 * x / d + l1


def rate(x: float, nu: float, l1: float) -> float:
    """I(x) = x log(x/(nu + l1 x)) - x + l1 x + nu."""
    _check_level(x)
    return x * math.log(x / (nu + l1 * x)) - x + l1 * x + nu


def rate_d2(x: float, nu: float, l1: float) -> float:
    _check_level(x)
    return nu * nu / (x * (nu + l1 * x) ** 2)


def rate_dk(x: float, nu: float, l1: float, i: int) -> float:
    """I^(i)(x) for i >= 2 from the closed form in u = l1 x/(nu + l1 x)."""
    _check_level(x)
    if i < 2:
        raise ValueError("rate_dk needs i >= 2")
    u = l1 * x / (nu + l1 * x)
    return (math.factorial(i - 2) * (-1) ** (i - 2) * x ** (1 - i)
            * ((i - 1) * u ** i - i * u ** (i - 1) + 1.0))


def mean_rate(model: HawkesModel) -> float:
    return model.nu / (1.0 - model.l1)


def asymptotic_var(model: HawkesModel) -> float:
    return model.nu / (1.0 - model.l1) ** 3


def eta_derivs_at_zero(model: HawkesModel) -> tuple[float, float, float]:
    """(eta'(0), eta''(0), eta'''(0)) in closed form."""
    nu, l1 = model.nu, model.l1
    return (nu / (1.0 - l1), nu / (1.0 - l1) ** 3, nu * (1.0 + 2.0 * l1) / (1.0 - l1) ** 5)


@dataclass(frozen=True)
class SaddleData:
    x: float
    theta_star: float
    I: float
    I2: float
    mean: float

    @classmethod
    def of(cls, model: HawkesModel, x: float) -> "SaddleData":
        nu, l1 = model.nu, model.l1
        return cls(x, theta_star(x, nu, l1), rate(x, nu, l1), rate_d2(x, nu, l1), mean_rate(model))


@lru_cache(maxsize=64)
def expansion(model: HawkesModel, x: float, K: int = DEFAULT_ORDER,
              step: float = DEFAULT_STEP, horizon: float = DEFAULT_HORIZON,
              x4_weight: int = 4) -> ExpansionContext:
    """Cached ladder/coefficients for (model, x, grid)."""
    return build_context(model, x, K, step, horizon, x4_weight)


def _order_depth(order: int) -> int:
    if order < 1:
        raise ValueError("order must be >= 1")
    # order v keeps coefficients up to index v-1, needing eta to 2v and psi to 2v-2
    return max(DEFAULT_ORDER, 2 * order)


def _series(lead: float, coeffs, t: float, order: int) -> float:
    total = lead
    for k in range(1, order):
        total += coeffs[k - 1] / t ** k
    return total


def ldp_tail(model: HawkesModel, t: float, x: float, order: int = 2,
             step: float = DEFAULT_STEP, horizon: float = DEFAULT_HORIZON,
             x4_weight: int = 4) -> float:
    """Precise large-deviation approximation of P(N_t >= t x), x above the mean.

    ``order`` counts retained terms: 1 uses psi(theta*) alone, 2 adds b_1/t.
    Orders above 2 are experimental.  ``x4_weight`` is forwarded to
    :func:`hawkestail.expansion.build_context`.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    _check_level(x)
    if x <= mean_rate(model):
        raise ValueError(f"x={x} must exceed the mean rate {mean_rate(model)} for the right tail")
    sd = SaddleData.of(model, x)
    ctx = expansion(model, x, _order_depth(order), step, horizon, x4_weight)
    pref = math.exp(-t * sd.I) * math.sqrt(sd.I2 / (2.0 * math.pi * t))
    return pref * _series(ctx.psi, ctx.b, t, order) / (1.0 - math.exp(-sd.theta_star))


def ldp_point(model: HawkesModel, t: float, x: float, order: int = 2,
              step: float = DEFAULT_STEP, horizon: float = DEFAULT_HORIZON) -> float:
    """Precise approximation of P(N_t = t x) for integer t x."""
    if not t > 0:
        raise ValueError("t must be positive")
    _check_level(x)
    n = round(t * x)
    if abs(t * x - n) >= LATTICE_TOL:
        raise LatticeError(f"t*x = {t * x} is not an integer")
    x = n / t
    sd = SaddleData.of(model, x)
    ctx = expansion(model, x, _order_depth(order), step, horizon)
    pref = math.exp(-t * sd.I) * math.sqrt(sd.I2 / (2.0 * math.pi * t))
    return pref * _series(ctx.psi, ctx.a, t, order)


def clt_threshold(model: HawkesModel, t: float, y: float) -> float:
    """mu t + sqrt(t) sigma y."""
    return mean_rate(model) * t + math.sqrt(t * asymptotic_var(model)) * y


def clt_tail(model: HawkesModel, t: float, y: float) -> float:
    """Gaussian tail Phi-bar(y) approximating P(N_t >= mu t + sqrt(t) sigma y)."""
    if not t > 0:
        raise ValueError("t must be positive")
    return float(ndtr(-y))


def mdp_tail(model: HawkesModel, t: float, y: float, m: int | None = None) -> float:
    """Moderate-deviation approximation of P(N_t >= mu t + sqrt(t) sigma y).

    ``m=None`` gives the cubic-correction form valid for y = o(t^{1/4});
    an integer ``m >= 3`` uses the rate-function Taylor terms of order
    2..m-1, valid for y = o(t^{1/2 - 1/m}).
    """
    if not y > 0:
        raise ValueError("y must be positive")
    if not t > 0:
        raise ValueError("t must be positive")
    e1, e2, e3 = eta_derivs_at_zero(model)
    lead = math.exp(-0.5 * y * y) / (y * math.sqrt(2.0 * math.pi))
    if m is None:
        return lead * math.exp(e3 * y ** 3 / (6.0 * e2 ** 1.5 * math.sqrt(t)))
    if m < 3:
        raise ValueError("m must be >= 3")
    expo = 0.0
    for i in range(2, m):
        expo += (rate_dk(e1, model.nu, model.l1, i) / math.factorial(i)
                 * e2 ** (i / 2) * y ** i / t ** ((i - 2) / 2))
    return math.exp(-expo) / (y * math.sqrt(2.0 * math.pi))
