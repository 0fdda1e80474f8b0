"""Exciting functions for linear Hawkes processes.

Every kernel exposes the pointwise value ``h(t)``, the right tail
``H(t) = int_t^inf h(s) ds`` and the L1 norm ``||h|| = H(0)``.  Kernels are
immutable; stability (``||h|| < 1``) is checked on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UnstableKernelError

# 8-point Gauss-Legendre rule on [0, 1], used for first moments over grid cells
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _check_time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("kernel evaluated at negative time")
    return arr


def _out(arr, t):
    return float(arr) if np.ndim(t) == 0 else arr


class Kernel:
    """Base class; subclasses implement ``_h``, ``_tail``, ``l1_norm``."""

    def eval(self, t):
        """h(t) for scalar or array ``t >= 0``."""
        arr = _check_time(t)
        return _out(self._h(arr), t)

    __call__ = eval

    def tail(self, t):
        """H(t) = int_t^inf h(s) ds."""
        arr = _check_time(t)
        return _out(self._tail(arr), t)

    def l1_norm(self) -> float:
        raise NotImplementedError

    def envelope(self, t):
        """sup_{s >= t} h(s); equals h for nonincreasing kernels."""
        return self.eval(t)

    def scaled(self, factor: float) -> "Kernel":
        """Kernel multiplied by ``factor`` (used for exponential tilting)."""
        raise NotImplementedError

    def sample_offsets(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw birth offsets from the density h(t) / ||h||."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    def _validate(self):
        if not self.l1_norm() < 1.0:
            raise UnstableKernelError(
                f"kernel L1 norm {self.l1_norm():.6g} must be < 1 for a stable process"
            )

    def cell_moments(self, step: float, n_cells: int) -> tuple[np.ndarray, np.ndarray]:
        """Zeroth and normalised first moments of h over grid cells.

        For cell ``j = [j*step, (j+1)*step]`` returns ``m0[j] = int h`` and
        ``m1[j] = int h(s) (s - j*step)/step ds``.  ``m0`` is built from tail
        differences so that ``m0.sum()`` equals ``||h|| - H(n_cells*step)``
        to rounding.
        """
        edges = step * np.arange(n_cells + 1)
        tails = np.asarray(self.tail(edges), dtype=float)
        m0 = tails[:-1] - tails[1:]
        s = edges[:-1, None] + step * _GL_NODES[None, :]
        m1 = step * (np.asarray(self.eval(s)) * _GL_NODES[None, :]) @ _GL_WEIGHTS
        return m0, m1


@dataclass(frozen=True)
class ExponentialKernel(Kernel):
    """h(t) = alpha * exp(-beta * t)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        self._validate()

    def _h(self, t):
        return self.alpha * np.exp(-self.beta * t)

    def _tail(self, t):
        return (self.alpha / self.beta) * np.exp(-self.beta * t)

    def l1_norm(self) -> float:
        return self.alpha / self.beta

    def scaled(self, factor: float) -> "ExponentialKernel":
        return ExponentialKernel(self.alpha * factor, self.beta)

    def sample_offsets(self, rng, size):
        return rng.exponential(1.0 / self.beta, size)

    def to_config(self) -> dict:
        return {"type": "exp", "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class PowerLawKernel(Kernel):
    """h(t) = c / (1 + t)**p with p > 2, so that int t h(t) dt is finite."""

    c: float
    p: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.p <= 2:
            raise ValueError("power-law exponent p must exceed 2")
        self._validate()

    def _h(self, t):
        return self.c * (1.0 + t) ** (-self.p)

    def _tail(self, t):
        return self.c * (1.0 + t) ** (1.0 - self.p) / (self.p - 1.0)

    def l1_norm(self) -> float:
        return self.c / (self.p - 1.0)

    def scaled(self, factor: float) -> "PowerLawKernel":
        return PowerLawKernel(self.c * factor, self.p)

    def sample_offsets(self, rng, size):
        # inverse of the cdf 1 - (1 + t)^(1 - p)
        u = 1.0 - rng.random(size)
        return u ** (-1.0 / (self.p - 1.0)) - 1.0

    def to_config(self) -> dict:
        return {"type": "powerlaw", "c": self.c, "p": self.p}


@dataclass(frozen=True, eq=False)
class TabulatedKernel(Kernel):
    """Kernel given by samples on a grid, linearly interpolated.

    The caller supplies ``l1`` and a ``tail_fn`` computing H(t) exactly or
    from a pre-integrated model; nothing is extrapolated past the grid, so
    evaluating h beyond ``times[-1]`` raises.
    """

    times: np.ndarray
    values: np.ndarray
    l1: float
    tail_fn: Callable[[np.ndarray], np.ndarray]
    _env: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("times and values must be 1-d arrays of equal length >= 2")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("times must start at 0 and be strictly increasing")
        if np.any(values < 0):
            raise ValueError("kernel values must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_env", np.maximum.accumulate(values[::-1])[::-1])
        self._validate()
        if not math.isclose(float(self.tail_fn(np.asarray(0.0))), self.l1, rel_tol=1e-8):
            raise ValueError("tail_fn(0) must equal the supplied l1 norm")

    def _h(self, t):
        if np.any(t > self.times[-1]):
            raise ValueError("tabulated kernel evaluated beyond its grid")
        return np.interp(t, self.times, self.values)

    def _tail(self, t):
        return np.asarray(self.tail_fn(t), dtype=float)

    def l1_norm(self) -> float:
        return float(self.l1)

    def envelope(self, t):
        arr = _check_time(t)
        idx = np.searchsorted(self.times, arr, side="right")
        later = np.where(idx < self.times.size, self._env[np.minimum(idx, self.times.size - 1)], 0.0)
        return _out(np.maximum(self._h(arr), later), t)

    def scaled(self, factor: float) -> "TabulatedKernel":
        fn = self.tail_fn
        return TabulatedKernel(self.times, self.values * factor, self.l1 * factor,
                               lambda t: factor * np.asarray(fn(t)))

    def sample_offsets(self, rng, size):
        tails = self._tail(self.times)
        if tails[-1] > 1e-12 * self.l1:
            raise ValueError("tabulated kernel has mass beyond its grid; cannot sample offsets")
        cdf = 1.0 - tails / self.l1
        return np.interp(rng.random(size), cdf, self.times)

    def to_config(self) -> dict:
        return {"type": "tabulated", "times": self.times.tolist(),
                "values": self.values.tolist(), "l1": self.l1}


def kernel_from_config(cfg: dict) -> Kernel:
    """Build a kernel from ``{"type": "exp", "alpha":..., "beta":...}`` or
    ``{"type": "powerlaw", "c":..., "p":...}``."""
    kind = cfg.get("type")
    if kind == "exp":
        return ExponentialKernel(float(cfg["alpha"]), float(cfg["beta"]))
    if kind == "powerlaw":
        return PowerLawKernel(float(cfg["c"]), float(cfg["p"]))
    raise ValueError(f"unknown kernel type {kind!r}")
