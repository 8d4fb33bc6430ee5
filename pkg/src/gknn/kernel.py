"""GkNN as a stochastic kernel, and convergence of the empirical kernel.

The GkNN output at predictor ``v`` is distributed as a finite mixture of
point masses on the ranked neighbour yields.  When the training pairs come
from a process with a continuous conditional law, the top-``k_N`` uniform
kernel approaches that law as ``N`` grows with ``k_N = floor(sqrt(N))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import ComponentAbsDiff, MetricSpec, RankDistribution, TrainingSet, rank_prefixes
from .rng import counter_uniforms

__all__ = [
    "DiscreteKernel",
    "SyntheticProcess",
    "KernelErrorRow",
    "eval_discrete_kernel",
    "generate_synthetic_series",
    "convergence_experiment",
    "default_grid",
    "k_for_n",
]

V_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
ENDPOINTS = (0.0, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class DiscreteKernel:
    ts: TrainingSet
    rd: RankDistribution
    metric: MetricSpec

    def measure(self, v, a: float, b: float) -> float:
        return eval_discrete_kernel(self, v, (a, b))


def eval_discrete_kernel(k: DiscreteKernel, v, interval) -> float:
    """Probability that the GkNN draw at ``v`` falls in the open interval ``(a, b)``."""
    a, b = interval
    if not a < b:
        raise ValueError(f"empty interval ({a}, {b})")
    v = np.asarray(v, dtype=np.float64).reshape(1, -1)
    prefix = rank_prefixes(v, k.ts, k.metric, k.rd.support_size)[0]
    u = k.ts.yields[prefix]
    inside = (u > a) & (u < b)
    return float(np.dot(k.rd.support, inside))


@dataclass(frozen=True)
class SyntheticProcess:
    """Exponential yields with predictor-dependent mean ``1 + v``, ``v`` in [0, 1]."""

    def rate(self, v):
        return 1.0 / (1.0 + np.asarray(v, dtype=np.float64))

    def density(self, v, xi):
        lam = self.rate(v)
        return lam * np.exp(-lam * np.asarray(xi, dtype=np.float64))

    def cdf(self, v, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return -np.expm1(-xi * self.rate(v))

    def inverse_cdf(self, v, rho):
        return -(1.0 + np.asarray(v, dtype=np.float64)) * np.log1p(-np.asarray(rho, dtype=np.float64))

    def interval_mass(self, v, a: float, b: float):
        return self.cdf(v, b) - self.cdf(v, a)


def generate_synthetic_series(sp: SyntheticProcess, T: int, seed: int):
    """Draw ``T`` pairs ``(v_t, z_t)``.

    ``v_t`` and the inverse-CDF variates ``rho_t`` come from two disjoint
    counter streams (run indices 0 and 1) of ``seed``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    t = np.arange(T)
    v = counter_uniforms(seed, 0, t)
    rho = counter_uniforms(seed, 1, t)
    return v, sp.inverse_cdf(v, rho)


def k_for_n(n: int) -> int:
    return max(1, math.isqrt(n))


def default_grid():
    """Evaluation points and all open intervals between the fixed endpoints."""
    return V_GRID, tuple(itertools.combinations(ENDPOINTS, 2))


@dataclass(frozen=True)
class KernelErrorRow:
    N: int
    k_N: int
    seed: int
    sup_error: float
    mean_error: float


def convergence_experiment(sp: SyntheticProcess, n_values, seeds, v_grid=None, intervals=None) -> list:
    """Grid error of the top-``k_N`` empirical kernel against the exact law.

    For each seed one synthetic series of length ``max(n_values)`` is drawn;
    the training set for ``N`` is its first ``N`` pairs.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or any(n < 1 for n in n_values):
        raise ValueError("n_values must be positive")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    dv, di = default_grid()
    v_grid = np.asarray(dv if v_grid is None else v_grid, dtype=np.float64)
    intervals = list(di if intervals is None else intervals)
    if v_grid.size == 0 or not intervals or any(not a < b for a, b in intervals):
        raise ValueError("invalid evaluation grid")
    lo = np.array([a for a, _ in intervals])
    hi = np.array([b for _, b in intervals])
    exact = sp.cdf(v_grid[:, None], hi[None, :]) - sp.cdf(v_grid[:, None], lo[None, :])
    metric = MetricSpec(ComponentAbsDiff(0))

    rows = []
    for seed in seeds:
        v, z = generate_synthetic_series(sp, n_values[-1], seed)
        for n in n_values:
            k = k_for_n(n)
            ts = TrainingSet(v[:n, None], z[:n])
            prefixes = rank_prefixes(v_grid[:, None], ts, metric, k)
            u = ts.yields[prefixes]
            counts = ((u[:, :, None] > lo) & (u[:, :, None] < hi)).sum(axis=1)
            err = np.abs(counts / k - exact)
            rows.append(KernelErrorRow(n, k, int(seed), float(err.max()), float(err.mean())))
    return rows
