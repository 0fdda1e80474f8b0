"""Importance sampling for P(N_t >= x t) by exponential tilting.

Under the tilted measure the baseline and the kernel are both multiplied by
gamma = x / (nu + ||h|| x), which makes x the law-of-large-numbers rate.  The
likelihood ratio back to the original measure is

    e^{-t I(x)} * exp(-theta* (N_t - x t) - (gamma - 1) sum_i H(t - u_i)),

and on {N_t >= x t} its second factor never exceeds 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deviations import mean_rate, rate, theta_star
from .errors import UnstableKernelError
from .kernel import Kernel
from .simulator import CHUNK_PATHS, EventPath, HawkesModel, batch_statistics


@dataclass(frozen=True)
class TiltedEstimate:
    estimate: float
    std_error: float
    n_paths: int
    gamma: float
    t: float
    x: float

    @property
    def rel_error(self) -> float:
        return self.std_error / self.estimate if self.estimate > 0 else math.inf

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        return max(0.0, self.estimate - z * self.std_error), self.estimate + z * self.std_error


def tilt_gamma(x: float, nu: float, l1: float) -> float:
    """gamma = x / (nu + ||h|| x); the tilted mean rate gamma nu / (1 - gamma ||h||) is x."""
    if not x > 0:
        raise ValueError("level x must be positive")
    return x / (nu + l1 * x)


def residual_sum(path: EventPath, kernel: Kernel, t: float) -> float:
    """sum over events u_i <= t of H(t - u_i)."""
    u = path.times[path.times <= t]
    if u.size == 0:
        return 0.0
    return math.fsum(np.atleast_1d(kernel.tail(t - u)))


def is_weights(model: HawkesModel, t: float, x: float, n_paths: int, seed: int,
               n_jobs: int = 1, chunk: int = CHUNK_PATHS) -> np.ndarray:
    """Per-path likelihood-ratio weights W, without the e^{-t I(x)} factor."""
    if not x > mean_rate(model):
        raise ValueError(f"x={x} must exceed the mean rate {mean_rate(model)}")
    if not t > 0:
        raise ValueError("t must be positive")
    nu, l1, kernel = model.nu, model.l1, model.kernel
    gamma = tilt_gamma(x, nu, l1)
    if gamma * l1 >= 1.0:
        raise UnstableKernelError("tilted process would be critical")
    tilted = model.tilted(gamma)
    th = theta_star(x, nu, l1)
    level = x * t

    def stat(ids, times, m):
        counts = np.bincount(ids, minlength=m)
        resid = np.bincount(ids, weights=kernel.tail(t - times), minlength=m) if ids.size else np.zeros(m)
        hit = counts >= level
        w = np.zeros(m)
        w[hit] = np.exp(-th * (counts[hit] - level) - (gamma - 1.0) * resid[hit])
        return w

    return batch_statistics(tilted, t, n_paths, seed, stat, n_jobs, chunk)


def is_tail(model: HawkesModel, t: float, x: float, n_paths: int, seed: int,
            n_jobs: int = 1) -> TiltedEstimate:
    """Unbiased importance-sampling estimate of P(N_t >= x t), x above the mean."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    w = is_weights(model, t, x, n_paths, seed, n_jobs)
    scale = math.exp(-t * rate(x, model.nu, model.l1))
    mean = math.fsum(w) / n_paths
    var = math.fsum((w - mean) ** 2) / (n_paths - 1) if n_paths > 1 else 0.0
    return TiltedEstimate(scale * mean, scale * math.sqrt(var / n_paths), n_paths,
                          tilt_gamma(x, model.nu, model.l1), t, x)


def is_tail_adaptive(model: HawkesModel, t: float, x: float, rel_tol: float, seed: int,
                     n_start: int = 10_000, n_max: int = 10_000_000,
                     n_jobs: int = 1) -> TiltedEstimate:
    """Double the path count until the relative standard error is below ``rel_tol``.

    Returns the last estimate even if ``n_max`` is reached first; check
    ``rel_error`` on the result.
    """
    n = n_start
    while True:
        est = is_tail(model, t, x, n, seed, n_jobs)
        if est.rel_error <= rel_tol or n >= n_max:
            return est
        n = min(2 * n, n_max)
