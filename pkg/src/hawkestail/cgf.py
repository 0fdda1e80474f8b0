"""Limiting cumulant ingredients of N_t.

For real theta below the critical exponent,

    E[exp(theta N_t)] = exp(nu * int_0^t (F(s; theta) - 1) ds),

where F solves the Volterra equation
``F(t) = exp(theta + int_0^t (F(t - s) - 1) h(s) ds)`` and tends to the
smaller root x(theta) of ``x = exp(theta + ||h|| (x - 1))``.  From these:
eta(theta) = nu (x - 1), phi(theta) = int_0^inf (F - x) and psi = exp(nu phi).

Convolutions are discretised by product integration: F is taken piecewise
linear on the grid and integrated exactly against h.  The cell masses sum to
``||h|| - H(t)``, so the discrete solution has the exact fixed point x(theta)
and ``F - x`` carries no O(step^2) offset that would accumulate in phi.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, HorizonExhaustedError, NoRealSolutionError
from .kernel import Kernel
from .simulator import HawkesModel

DEFAULT_STEP = 0.01
DEFAULT_HORIZON = 60.0
MAX_DOUBLINGS = 3
_PICARD_TOL = 1e-12


def theta_critical(l1: float) -> float:
    """theta_c = ||h|| - 1 - log ||h||; x(theta) is finite iff theta <= theta_c."""
    if not 0.0 < l1 < 1.0:
        raise ValueError("L1 norm must lie in (0, 1)")
    return l1 - 1.0 - math.log(l1)


def solve_x(theta: float, l1: float, tol: float = 1e-12) -> float:
    """Smaller root of ``x = exp(theta + l1 (x - 1))``.

    Fixed-point iteration from x=1 approaches the smaller root monotonically;
    Newton steps then polish it.
    """
    theta_c = theta_critical(l1)
    if theta > theta_c + 1e-13:
        raise NoRealSolutionError(f"theta={theta} exceeds theta_c={theta_c}")
    if theta >= theta_c:
        return 1.0 / l1
    x = 1.0
    for _ in range(200):
        nxt = math.exp(theta + l1 * (x - 1.0))
        if abs(nxt - x) < 1e-6:
            x = nxt
            break
        x = nxt
    for _ in range(100):
        e = math.exp(theta + l1 * (x - 1.0))
        g, dg = x - e, 1.0 - l1 * e
        if dg <= 0:
            # iterate overshot the double root region; back off toward it
            x = min(x, 1.0 / l1) - 1e-9
            continue
        dx = g / dg
        x -= dx
        if abs(dx) < tol * max(1.0, abs(x)):
            break
    x = min(x, 1.0 / l1)
    if abs(x - math.exp(theta + l1 * (x - 1.0))) > 10 * tol * max(1.0, x):
        raise ConvergenceError(f"solve_x did not converge at theta={theta}")
    return x


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``values[i] ~ f(i * step)`` for ``i = 0..round(horizon/step)``."""

    step: float
    horizon: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.values.size)

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def to_csv(self, fh, header=("t", "F")) -> None:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, v in zip(self.times, self.values):
            writer.writerow([repr(float(t)), repr(float(v))])


@dataclass(frozen=True, eq=False)
class ConvolutionWeights:
    """Product-integration weights for ``int_0^{t_n} f(t_n - s) h(s) ds``.

    The integral equals ``a0 * f_n + sum_{i=1}^{n-1} w[i] f_{n-i} + b[n-1] f_0``
    for piecewise-linear f; ``mass[n]`` is the same rule applied to f = 1.
    """

    step: float
    a0: float
    w: np.ndarray
    b: np.ndarray
    mass: np.ndarray

    @property
    def n(self) -> int:
        return self.mass.size - 1

    def rest(self, f: np.ndarray, n: int) -> float:
        """Every term of the rule at node n except ``a0 * f_n``."""
        if n == 0:
            return 0.0
        return float(np.dot(self.w[1:n], f[n - 1:0:-1])) + self.b[n - 1] * f[0]

    def full(self, f: np.ndarray) -> np.ndarray:
        """The whole convolution at every node (``f`` already solved)."""
        out = np.empty_like(f)
        out[0] = 0.0
        for n in range(1, f.size):
            out[n] = self.rest(f, n) + self.a0 * f[n]
        return out


@lru_cache(maxsize=32)
def convolution_weights(kernel: Kernel, step: float, n: int) -> ConvolutionWeights:
    m0, m1 = kernel.cell_moments(step, n)
    a = m0 - m1
    w = np.empty(n + 1)
    w[0] = a[0]
    w[1:n] = a[1:n] + m1[: n - 1]
    w[n] = m1[n - 1]
    mass = np.concatenate(([0.0], np.cumsum(m0)))
    return ConvolutionWeights(step, float(a[0]), w, m1, mass)


def _n_steps(step: float, horizon: float) -> int:
    if step <= 0 or horizon <= 0:
        raise ValueError("step and horizon must be positive")
    return int(math.floor(horizon / step + 1e-9))


def solve_F(theta: float, kernel: Kernel, step: float = DEFAULT_STEP,
            horizon: float = DEFAULT_HORIZON) -> GridFunction:
    """Grid solution of ``F(t) = exp(theta + int_0^t (F(t-s) - 1) h(s) ds)``.

    Each step resolves the implicit ``s = 0`` end of the convolution by Picard
    iteration, whose contraction factor is about ``F * h(0) * step / 2``.
    """
    l1 = kernel.l1_norm()
    if theta >= theta_critical(l1):
        raise NoRealSolutionError("solve_F requires theta < theta_c")
    n = _n_steps(step, horizon)
    cw = convolution_weights(kernel, step, n)
    F = np.empty(n + 1)
    F[0] = math.exp(theta)
    for i in range(1, n + 1):
        base = theta + cw.rest(F, i) - cw.mass[i]
        f = F[i - 1]
        for _ in range(100):
            nxt = math.exp(base + cw.a0 * f)
            if abs(nxt - f) <= _PICARD_TOL * max(1.0, abs(nxt)):
                f = nxt
                break
            if cw.a0 * nxt >= 1.0 or not math.isfinite(nxt):
                raise ConvergenceError(
                    f"Volterra step diverged at t={i * step}; theta too close to theta_c for step={step}")
            f = nxt
        else:
            raise ConvergenceError(f"Picard iteration stalled at t={i * step}")
        F[i] = f
    if np.any(F <= 0) or np.any(F > 1.0 / l1 + 1e-9):
        raise ConvergenceError("solution left the admissible band (0, 1/||h||]")
    return GridFunction(step, n * step, F)


def _fit_tail(d: np.ndarray, s: np.ndarray) -> tuple[float, float] | None:
    """Integral beyond ``s[-1]`` of a geometric or power-law model fitted to d.

    Returns ``(tail, residual)`` for the better of the two models, or None
    when d changes sign in the window.
    """
    if np.any(d == 0) or np.any(np.sign(d) != np.sign(d[-1])):
        return None
    sign, logd = np.sign(d[-1]), np.log(np.abs(d))
    best = None
    b, a = np.polyfit(s, logd, 1)
    if b < 0:
        resid = float(np.max(np.abs(np.expm1(a + b * s - logd))))
        best = (sign * -math.exp(a + b * s[-1]) / b, resid)
    q, c = np.polyfit(np.log(s), logd, 1)
    if q < -1:
        resid = float(np.max(np.abs(np.expm1(c + q * np.log(s) - logd))))
        if best is None or resid < best[1]:
            best = (sign * -math.exp(c) * s[-1] ** (q + 1) / (q + 1), resid)
    return best


def _fit_kernel_tail(d: np.ndarray, s: np.ndarray, kernel: Kernel) -> tuple[float, float] | None:
    """Least-squares fit of d by a H + b h + c h' on the window.

    Heavy-tailed kernels make F - x decay like the kernel itself rather than
    geometrically; the three shapes have closed-form integrals beyond s[-1]
    (quadrature for H, then H and -h).
    """
    try:
        H, h = np.asarray(kernel.tail(s)), np.asarray(kernel.eval(s))
        eps = 1e-4 * max(s[1] - s[0], 1e-8)
        dh = (np.asarray(kernel.eval(s + eps)) - np.asarray(kernel.eval(s - eps))) / (2 * eps)
        end = float(s[-1])
        int_H = integrate.quad(kernel.tail, end, np.inf, limit=200)[0]
    except ValueError:
        return None
    A = np.column_stack([H, h, dh])
    scale = np.max(np.abs(A), axis=0)
    if np.any(scale == 0):
        return None
    coef = np.linalg.lstsq(A / scale, d, rcond=None)[0] / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = float(np.max(np.abs(A @ coef - d) / np.abs(d)))
    if not math.isfinite(resid):
        return None
    tail = coef[0] * int_H + coef[1] * float(kernel.tail(end)) - coef[2] * float(kernel.eval(end))
    return float(tail), resid


def tail_integral(values: np.ndarray, step: float, target: float,
                  window: float = 0.1, max_resid: float = 0.1,
                  kernel: Kernel | None = None) -> float | None:
    """``int_0^inf (f - target)`` from grid samples of f on ``[0, T]``.

    Trapezoid on the grid plus the exact integral of a tail model fitted on
    the last ``window`` fraction of the horizon: geometric, power law, or
    (when ``kernel`` is given) a combination of the kernel's own shapes.
    The best-fitting model is used; None if none fits within ``max_resid``
    relative error.
    """
    d = values - target
    body = float(np.trapezoid(d, dx=step))
    n = d.size - 1
    lo = min(int(math.floor((1.0 - window) * n)), n - 10)
    tail_d = d[lo:]
    if np.max(np.abs(tail_d)) <= 1e-10 * (1.0 + abs(target)):
        return body
    s = step * np.arange(lo, n + 1)
    fits = [_fit_tail(tail_d, s)]
    if kernel is not None and np.all(tail_d != 0):
        fits.append(_fit_kernel_tail(tail_d, s, kernel))
    fits = [f for f in fits if f is not None and f[1] <= max_resid]
    if not fits:
        return None
    return float(body + min(fits, key=lambda f: f[1])[0])


def _phi_and_grid(theta: float, kernel: Kernel, step: float,
                  horizon: float) -> tuple[float, GridFunction]:
    x = solve_x(theta, kernel.l1_norm())
    for _ in range(MAX_DOUBLINGS + 1):
        grid = solve_F(theta, kernel, step, horizon)
        val = tail_integral(grid.values, step, x, kernel=kernel)
        if val is not None:
            return val, grid
        horizon *= 2.0
    raise HorizonExhaustedError(f"F(.; {theta}) - x did not reach a fittable tail by T={horizon / 2}")


def compute_phi(theta: float, kernel: Kernel, step: float = DEFAULT_STEP,
                horizon: float = DEFAULT_HORIZON) -> float:
    """phi(theta) = int_0^inf (F(s; theta) - x(theta)) ds.

    If the tail model does not fit, the horizon is doubled (at most
    ``MAX_DOUBLINGS`` times) before giving up.
    """
    if theta == 0.0:
        return 0.0
    return _phi_and_grid(theta, kernel, step, horizon)[0]


def compute_psi(theta: float, model: HawkesModel, step: float = DEFAULT_STEP,
                horizon: float = DEFAULT_HORIZON) -> float:
    """psi(theta) = exp(nu * phi(theta)), the mod-phi limiting function."""
    return math.exp(model.nu * compute_phi(theta, model.kernel, step, horizon))


def compute_eta(theta: float, model: HawkesModel) -> float:
    """eta(theta) = nu (x(theta) - 1), the limiting cumulant per unit time."""
    return model.nu * (solve_x(theta, model.l1) - 1.0)


def log_mgf(theta: float, model: HawkesModel, t: float,
            step: float = DEFAULT_STEP) -> float:
    """log E[exp(theta N_t)] = nu * int_0^t (F(s) - 1) ds (exact in t)."""
    grid = solve_F(theta, model.kernel, step, t)
    return model.nu * float(np.trapezoid(grid.values - 1.0, dx=step))


def phi_partial(theta: float, kernel: Kernel, t: float, step: float = DEFAULT_STEP) -> float:
    """int_0^t (F(s) - x) ds, the finite-time version of phi."""
    grid = solve_F(theta, kernel, step, t)
    return float(np.trapezoid(grid.values - solve_x(theta, kernel.l1_norm()), dx=step))


@dataclass(frozen=True, eq=False)
class CgfContext:
    theta: float
    x_theta: float
    F: GridFunction
    phi: float
    psi: float
    eta: float
    theta_c: float

    def summary(self) -> dict:
        return {"theta": self.theta, "x_theta": self.x_theta, "phi": self.phi,
                "psi": self.psi, "eta": self.eta, "theta_c": self.theta_c,
                "step": self.F.step, "horizon": self.F.horizon,
                "F_end": float(self.F.values[-1])}


def cgf_context(theta: float, model: HawkesModel, step: float = DEFAULT_STEP,
                horizon: float = DEFAULT_HORIZON) -> CgfContext:
    l1 = model.l1
    x = solve_x(theta, l1)
    phi, grid = _phi_and_grid(theta, model.kernel, step, horizon)
    if theta == 0.0:
        phi = 0.0
    return CgfContext(theta, x, grid, phi, math.exp(model.nu * phi),
                      model.nu * (x - 1.0), theta_critical(l1))
