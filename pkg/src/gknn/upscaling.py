"""Monthly upscaling methods for rainwater-tank yield.

Each method maps a long series of monthly climate records to monthly tank
yields by resampling a short training table built from a daily simulation:

* ``nn``: nearest record of the same month under a weighted Manhattan
  distance (deterministic);
* ``knn``: one of the ``k`` nearest under a standardised Euclidean distance,
  chosen with probability proportional to ``1/rank``;
* ``bootstrap``: a uniform draw from the fixed 50-sample rainfall band that
  contains the query rainfall;
* ``modified-bootstrap``: a uniform draw from the 50 records with rainfall
  closest to the query's.

Rainfall depth is the last climatic variable in every schema.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ComponentAbsDiff,
    MetricSpec,
    RankDistribution,
    StdNormalizedEuclidean,
    TrainingSet,
    WeightedManhattan,
    gknn_simulate_runs,
    rank_prefixes,
)
from .rng import counter_uniforms

__all__ = [
    "SCHEMAS",
    "BAND_SIZE",
    "MonthlyTrainingRecord",
    "MonthlyQueryRecord",
    "BandIndex",
    "METHODS",
    "method_plan",
    "upscale",
    "upscale_nn",
    "upscale_knn",
    "upscale_bootstrap",
    "upscale_modified_bootstrap",
]

SCHEMAS = {
    "coombes": ("avg_temp_c", "rain_days", "rain_depth_mm"),
    "knn": ("rain_depth_mm",),
    "bootstrap": ("rain_depth_mm",),
}
BAND_SIZE = 50
METHODS = ("nn", "knn", "bootstrap", "modified-bootstrap")


@dataclass(frozen=True)
class MonthlyTrainingRecord:
    month_label: int | None
    climatic_variables: tuple
    yield_l: float

    def __post_init__(self):
        _check_label(self.month_label)
        object.__setattr__(self, "climatic_variables", tuple(float(x) for x in self.climatic_variables))
        if not (np.isfinite(self.yield_l) and self.yield_l >= 0):
            raise ValueError("yield must be finite and non-negative")


@dataclass(frozen=True)
class MonthlyQueryRecord:
    month_label: int | None
    climatic_variables: tuple

    def __post_init__(self):
        _check_label(self.month_label)
        object.__setattr__(self, "climatic_variables", tuple(float(x) for x in self.climatic_variables))


def _check_label(label):
    if label is not None and (int(label) != label or not 1 <= label <= 12):
        raise ValueError(f"month label must be an integer in 1..12, got {label!r}")


def _tables(queries: Sequence[MonthlyQueryRecord], training: Sequence[MonthlyTrainingRecord]):
    if not training:
        raise ValueError("training table is empty")
    if not queries:
        raise ValueError("query series is empty")
    nvar = {len(r.climatic_variables) for r in training}
    if len(nvar) != 1:
        raise ValueError("training records have inconsistent climatic variables")
    nvar = nvar.pop()
    if any(len(q.climatic_variables) != nvar for q in queries):
        raise ValueError("query records do not match the training schema")
    tr_labels = np.array([np.nan if r.month_label is None else r.month_label for r in training])
    q_labels = np.array([np.nan if q.month_label is None else q.month_label for q in queries])
    tr_vars = np.array([r.climatic_variables for r in training], dtype=np.float64).reshape(len(training), nvar)
    q_vars = np.array([q.climatic_variables for q in queries], dtype=np.float64).reshape(len(queries), nvar)
    yields = np.array([r.yield_l for r in training], dtype=np.float64)
    return tr_labels, tr_vars, yields, q_labels, q_vars


def _with_labels(labels, variables, what):
    if np.any(np.isnan(labels)):
        raise ValueError(f"{what} records need month labels for this method")
    return np.column_stack([labels, variables])


# --------------------------------------------------------------------------
# bands
# --------------------------------------------------------------------------


class BandIndex:
    """Consecutive 50-sample bands of the rainfall-sorted training records.

    The last band holds the remainder when ``N`` is not a multiple of the
    band size.  Band ``i`` covers rainfall ``[edges[i-1], edges[i])`` where
    each edge is the midpoint between the largest rainfall of one band and
    the smallest of the next; the outer bands extend to +-infinity.
    """

    def __init__(self, rainfall, band_size: int = BAND_SIZE):
        r = np.asarray(rainfall, dtype=np.float64).reshape(-1)
        if r.size < band_size:
            raise ValueError(f"banding needs at least {band_size} samples, got {r.size}")
        self.band_size = band_size
        self.rainfall = r
        self.order = np.argsort(r, kind="stable")
        starts = np.arange(0, r.size, band_size)
        self.members = [self.order[s : s + band_size] for s in starts]
        sorted_r = r[self.order]
        hi = sorted_r[np.minimum(starts + band_size, r.size) - 1]
        lo = sorted_r[starts]
        self.edges = (hi[:-1] + lo[1:]) / 2.0

    def __len__(self):
        return len(self.members)

    @property
    def ranges(self) -> list:
        bounds = np.concatenate([[-np.inf], self.edges, [np.inf]])
        return list(zip(bounds[:-1], bounds[1:]))

    def locate(self, rainfall) -> np.ndarray:
        return np.searchsorted(self.edges, np.asarray(rainfall, dtype=np.float64), side="right")


# --------------------------------------------------------------------------
# methods
# --------------------------------------------------------------------------


def method_plan(method: str, training: Sequence[MonthlyTrainingRecord], k: int | None = None,
                weights=None):
    """Predictor layout, metric and rank distribution for a GkNN method.

    Returns ``(ts, metric, rd, to_predictors)`` where ``to_predictors`` maps
    ``(labels, variables)`` arrays of queries to predictor rows.
    """
    dummy = [MonthlyQueryRecord(training[0].month_label, training[0].climatic_variables)]
    tr_labels, tr_vars, yields, _, _ = _tables(dummy, training)
    n = yields.shape[0]
    if method == "nn":
        nvar = tr_vars.shape[1]
        w = (1.0,) * nvar if weights is None else tuple(weights)
        ts = TrainingSet(_with_labels(tr_labels, tr_vars, "training"), yields)
        metric = MetricSpec(WeightedManhattan(w), month_filter=True, label_index=0)
        return ts, metric, RankDistribution.top_k_uniform(1, n), lambda lab, var: _with_labels(lab, var, "query")
    if method == "knn":
        if k is None:
            raise ValueError("knn needs k")
        ts = TrainingSet(_with_labels(tr_labels, tr_vars, "training"), yields)
        metric = MetricSpec(StdNormalizedEuclidean(), label_index=0)
        return ts, metric, RankDistribution.harmonic(k, n), lambda lab, var: _with_labels(lab, var, "query")
    if method == "modified-bootstrap":
        if n < BAND_SIZE:
            raise ValueError(f"modified bootstrap needs at least {BAND_SIZE} records, got {n}")
        ts = TrainingSet(tr_vars[:, -1:], yields)
        metric = MetricSpec(ComponentAbsDiff(0))
        return ts, metric, RankDistribution.top_k_uniform(BAND_SIZE, n), lambda lab, var: var[:, -1:]
    raise ValueError(f"{method!r} is not a GkNN method")


def upscale(method: str, queries: Sequence[MonthlyQueryRecord], training: Sequence[MonthlyTrainingRecord],
            *, k: int | None = None, seed: int = 0, runs=1, weights=None) -> np.ndarray:
    """Yields for ``runs`` replicates, shape ``(R, T)``.

    ``runs`` is a count (run indices ``1..runs``) or an explicit sequence of
    run indices.  Rankings are computed once and shared by all runs.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    run_idx = np.arange(1, runs + 1) if np.isscalar(runs) else np.asarray(runs).reshape(-1)
    _, tr_vars, yields, q_labels, q_vars = _tables(queries, training)
    if method == "bootstrap":
        bands = BandIndex(tr_vars[:, -1])
        which = bands.locate(q_vars[:, -1])
        sizes = np.array([len(b) for b in bands.members])[which]
        padded = np.full((len(bands), BAND_SIZE), -1, dtype=np.intp)
        for i, mem in enumerate(bands.members):
            padded[i, : len(mem)] = mem
        t = np.arange(q_vars.shape[0])
        u = counter_uniforms(seed, run_idx[:, None], t[None, :])
        pick = np.minimum((u * sizes).astype(np.intp), sizes - 1)
        return yields[padded[which[None, :], pick]]
    ts, metric, rd, to_pred = method_plan(method, training, k=k, weights=weights)
    q = to_pred(q_labels, q_vars)
    prefixes = rank_prefixes(q, ts, metric, rd.support_size)
    if method == "nn":
        return np.broadcast_to(ts.yields[prefixes[:, 0]], (run_idx.shape[0], q.shape[0])).copy()
    return gknn_simulate_runs(q, ts, metric, rd, seed, run_idx, prefixes=prefixes)


def upscale_nn(queries, training, weights=None) -> np.ndarray:
    """Deterministic same-month nearest-neighbour yields (no randomness used)."""
    return upscale("nn", queries, training, weights=weights)[0]


def upscale_knn(queries, training, k: int, seed: int = 0, run_index: int = 1) -> np.ndarray:
    return upscale("knn", queries, training, k=k, seed=seed, runs=[run_index])[0]


def upscale_bootstrap(queries, training, seed: int = 0, run_index: int = 1) -> np.ndarray:
    return upscale("bootstrap", queries, training, seed=seed, runs=[run_index])[0]


def upscale_modified_bootstrap(queries, training, seed: int = 0, run_index: int = 1) -> np.ndarray:
    return upscale("modified-bootstrap", queries, training, seed=seed, runs=[run_index])[0]
