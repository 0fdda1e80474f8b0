"""Exact simulation of linear Hawkes paths and the naive tail estimator.

Two generators are provided: Ogata thinning on the conditional intensity, and
the immigration-birth (cluster) construction.  Batched Monte Carlo uses the
cluster construction vectorised over many paths at once.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .kernel import Kernel

CHUNK_PATHS = 20_000


@dataclass(frozen=True)
class HawkesModel:
    """Linear Hawkes process with baseline ``nu`` and exciting function ``kernel``."""

    nu: float
    kernel: Kernel

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("baseline intensity nu must be positive")

    @property
    def l1(self) -> float:
        return self.kernel.l1_norm()

    @property
    def mean_rate(self) -> float:
        return self.nu / (1.0 - self.l1)

    def tilted(self, gamma: float) -> "HawkesModel":
        """Model with intensity multiplied by ``gamma`` (baseline and kernel)."""
        return HawkesModel(gamma * self.nu, self.kernel.scaled(gamma))


@dataclass(frozen=True, eq=False)
class EventPath:
    horizon: float
    times: np.ndarray
    seed: int | None = None

    def __len__(self):
        return int(self.times.size)

    def count(self, t: float | None = None) -> int:
        """N_t, the number of events in [0, t] (default: the whole horizon)."""
        if t is None:
            return len(self)
        return int(np.searchsorted(self.times, t, side="right"))


def path_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream for path (or chunk) ``index`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def simulate_thinning(model: HawkesModel, horizon: float, seed: int,
                      rng: np.random.Generator | None = None) -> EventPath:
    """Ogata thinning.

    The dominating rate after the current time ``s`` is
    ``nu + sum_i sup_{u >= s - t_i} h(u)``; it is recomputed after every
    accepted or rejected candidate.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    rng = path_rng(seed) if rng is None else rng
    kernel, nu = model.kernel, model.nu
    events: list[float] = []
    hist = np.empty(0)
    s = 0.0
    while True:
        bound = nu + (float(np.sum(kernel.envelope(s - hist))) if hist.size else 0.0)
        s += rng.exponential(1.0 / bound)
        if s > horizon:
            break
        lam = nu + (float(np.sum(kernel.eval(s - hist))) if hist.size else 0.0)
        if rng.random() * bound <= lam:
            events.append(s)
            hist = np.asarray(events)
    return EventPath(float(horizon), np.asarray(events, dtype=float), seed)


def _cluster_batch(rng: np.random.Generator, n_paths: int, model: HawkesModel,
                   horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """Event (path_id, time) pairs for ``n_paths`` cluster-constructed paths.

    Descendants born after ``horizon`` are dropped together with their whole
    subtree, since every offspring is born later than its parent.
    """
    kernel = model.kernel
    branching = kernel.l1_norm()
    counts = rng.poisson(model.nu * horizon, n_paths)
    ids = np.repeat(np.arange(n_paths), counts)
    times = rng.uniform(0.0, horizon, ids.size)
    all_ids, all_times = [ids], [times]
    while ids.size:
        kids = rng.poisson(branching, ids.size)
        parent = np.repeat(np.arange(ids.size), kids)
        born = times[parent] + kernel.sample_offsets(rng, parent.size)
        keep = born <= horizon
        ids, times = ids[parent[keep]], born[keep]
        all_ids.append(ids)
        all_times.append(times)
    return np.concatenate(all_ids), np.concatenate(all_times)


def simulate_cluster(model: HawkesModel, horizon: float, seed: int,
                     rng: np.random.Generator | None = None) -> EventPath:
    """Immigration-birth construction of a single path."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    rng = path_rng(seed) if rng is None else rng
    if horizon == 0:
        return EventPath(0.0, np.empty(0), seed)
    _, times = _cluster_batch(rng, 1, model, horizon)
    times = np.sort(times)
    return EventPath(float(horizon), times, seed)


def simulate_paths(model: HawkesModel, horizon: float, n_paths: int, seed: int,
                   method: str = "cluster") -> list[EventPath]:
    """``n_paths`` independent paths; path ``i`` uses stream ``(seed, i)``."""
    sim = {"cluster": simulate_cluster, "thinning": simulate_thinning}[method]
    return [sim(model, horizon, seed, rng=path_rng(seed, i)) for i in range(n_paths)]


def offspring_counts(model: HawkesModel, n_births: int, seed: int) -> np.ndarray:
    """Children per individual as drawn by the cluster generator."""
    return path_rng(seed).poisson(model.l1, n_births)


def batch_statistics(model: HawkesModel, horizon: float, n_paths: int, seed: int,
                     stat: Callable[[np.ndarray, np.ndarray, int], np.ndarray],
                     n_jobs: int = 1, chunk: int = CHUNK_PATHS) -> np.ndarray:
    """Per-path statistic over ``n_paths`` cluster paths, in path order.

    Paths are generated in fixed-size chunks, chunk ``c`` drawing from stream
    ``(seed, c)``, so the output does not depend on ``n_jobs``.
    ``stat(ids, times, m)`` maps a chunk's events to ``m`` per-path values.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    sizes = [min(chunk, n_paths - start) for start in range(0, n_paths, chunk)]

    def run(c: int) -> np.ndarray:
        ids, times = _cluster_batch(path_rng(seed, c), sizes[c], model, horizon)
        return stat(ids, times, sizes[c])

    if n_jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    return np.concatenate(parts)


def event_counts(model: HawkesModel, horizon: float, n_paths: int, seed: int,
                 n_jobs: int = 1) -> np.ndarray:
    """N_T for each of ``n_paths`` cluster paths."""
    return batch_statistics(model, horizon, n_paths, seed,
                            lambda ids, _, m: np.bincount(ids, minlength=m), n_jobs)


def mc_tail(model: HawkesModel, t: float, x: float, n_paths: int, seed: int,
            n_jobs: int = 1) -> tuple[float, float]:
    """Naive estimate of P(N_t >= x t) with its binomial standard error."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if x <= 0:
        return 1.0, 0.0
    counts = event_counts(model, t, n_paths, seed, n_jobs)
    p = float(np.count_nonzero(counts >= x * t)) / n_paths
    return p, math.sqrt(p * (1.0 - p) / n_paths)


def write_paths_csv(paths: Iterable[EventPath], fh) -> None:
    """CSV with columns ``path_id, event_time``."""
    writer = csv.writer(fh)
    writer.writerow(["path_id", "event_time"])
    for i, path in enumerate(paths):
        for u in path.times:
            writer.writerow([i, repr(float(u))])


def read_paths_csv(fh, horizon: float) -> list[EventPath]:
    rows: dict[int, list[float]] = {}
    for row in csv.DictReader(fh):
        rows.setdefault(int(row["path_id"]), []).append(float(row["event_time"]))
    n = max(rows) + 1 if rows else 0
    return [EventPath(horizon, np.asarray(rows.get(i, []), dtype=float)) for i in range(n)]

