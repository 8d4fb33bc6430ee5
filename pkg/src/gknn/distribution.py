"""Visit frequencies of ranking classes and the long-run limits built on them.

A predictor series is summarised by how often it lands in each ranking
class (queries sharing the same k nearest neighbours in the same order).
The finite-T frequencies stand in for the limiting distribution of an
eventually well distributed series.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .analytics import weighted_moments
from .core import MetricSpec, RankDistribution, TrainingSet, rank_prefixes

__all__ = ["EmpiricalDistribution", "estimate_nu", "limit_annual_yield", "limit_m_var"]


def _source_digest(ts: TrainingSet, rd: RankDistribution) -> str:
    h = hashlib.sha256()
    h.update(ts.predictors.tobytes())
    h.update(ts.yields.tobytes())
    h.update(rd.key())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Counts of realised ranking classes, keyed by k-prefix index tuples."""

    counts: dict
    T: int
    source: str = ""

    @property
    def frequencies(self) -> dict:
        return {key: c / self.T for key, c in self.counts.items()}

    def __len__(self):
        return len(self.counts)


def estimate_nu(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution) -> EmpiricalDistribution:
    prefixes = rank_prefixes(series, ts, m, rd.support_size)
    classes, counts = np.unique(prefixes, axis=0, return_counts=True)
    table = {tuple(int(i) for i in row): int(c) for row, c in zip(classes, counts)}
    return EmpiricalDistribution(table, prefixes.shape[0], _source_digest(ts, rd))


def _class_moments(nu: EmpiricalDistribution, ts: TrainingSet, rd: RankDistribution):
    if nu.source and nu.source != _source_digest(ts, rd):
        raise ValueError("distribution was estimated with a different training set or rank distribution")
    keys = sorted(nu.counts)
    idx = np.array(keys, dtype=np.intp)
    if idx.shape[1] != rd.support_size:
        raise ValueError("class keys do not match the rank distribution support")
    freq = np.array([nu.counts[k] for k in keys], dtype=np.float64) / nu.T
    mean, var = weighted_moments(ts.yields[idx], rd.support)
    return freq, mean, var


def limit_annual_yield(nu: EmpiricalDistribution, ts: TrainingSet, rd: RankDistribution) -> float:
    """``12 * sum(freq * class_mean)``: the long-run average annual yield."""
    freq, mean, _ = _class_moments(nu, ts, rd)
    return 12.0 * float(np.dot(freq, mean))


def limit_m_var(nu: EmpiricalDistribution, ts: TrainingSet, rd: RankDistribution) -> float:
    """``12 * sum(freq * class_variance)``: the limit of ``m * Var(Y)``."""
    freq, _, var = _class_moments(nu, ts, rd)
    return 12.0 * float(np.dot(freq, var))
