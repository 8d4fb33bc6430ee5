"""Training data, metrics, neighbour ranking and the GkNN sampler.

Indices are 0-based throughout: rank ``0`` is the nearest neighbour and
training records are addressed by their row position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .rng import SeededSampler, counter_uniforms

__all__ = [
    "TrainingRecord",
    "TrainingSet",
    "WeightedManhattan",
    "StdNormalizedEuclidean",
    "ComponentAbsDiff",
    "MetricSpec",
    "RankDistribution",
    "NeighborRanking",
    "make_rank_distribution",
    "rank_neighbors",
    "rank_prefixes",
    "sample_rank",
    "select_ranks",
    "gknn_simulate",
    "gknn_simulate_runs",
]

_PROB_TOL = 1e-12
_BLOCK = 512


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TrainingRecord:
    predictor: tuple
    yield_value: float

    def __post_init__(self):
        object.__setattr__(self, "predictor", tuple(float(x) for x in self.predictor))
        if not np.all(np.isfinite(self.predictor)):
            raise ValueError("predictor components must be finite")
        if not (np.isfinite(self.yield_value) and self.yield_value >= 0):
            raise ValueError("yield must be finite and non-negative")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Predictor matrix ``(N, d)`` paired with non-negative yields ``(N,)``.

    Column means and population standard deviations are computed once, over
    the full record list, and reused by the normalised Euclidean metric.
    """

    predictors: np.ndarray
    yields: np.ndarray
    means: np.ndarray = field(init=False, repr=False)
    stds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.predictors, dtype=np.float64)
        if w.ndim == 1:
            w = w[:, None]
        u = np.array(self.yields, dtype=np.float64).reshape(-1)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("predictors must be a non-empty (N, d) array")
        if w.shape[0] != u.shape[0]:
            raise ValueError(f"{w.shape[0]} predictor rows but {u.shape[0]} yields")
        if not np.all(np.isfinite(w)):
            raise ValueError("predictor components must be finite")
        if not np.all(np.isfinite(u)) or np.any(u < 0):
            raise ValueError("yields must be finite and non-negative")
        object.__setattr__(self, "predictors", _frozen(w))
        object.__setattr__(self, "yields", _frozen(u))
        object.__setattr__(self, "means", _frozen(w.mean(axis=0)))
        object.__setattr__(self, "stds", _frozen(w.std(axis=0)))

    @classmethod
    def from_records(cls, records: Iterable[TrainingRecord]) -> "TrainingSet":
        records = list(records)
        if not records:
            raise ValueError("training set needs at least one record")
        dims = {len(r.predictor) for r in records}
        if len(dims) != 1:
            raise ValueError("all records must share predictor dimensionality")
        return cls(
            np.array([r.predictor for r in records]),
            np.array([r.yield_value for r in records]),
        )

    @property
    def n(self) -> int:
        return self.yields.shape[0]

    @property
    def dim(self) -> int:
        return self.predictors.shape[1]

    @property
    def records(self) -> list:
        return [TrainingRecord(tuple(w), float(u)) for w, u in zip(self.predictors, self.yields)]

    def subset(self, n: int) -> "TrainingSet":
        """The first ``n`` records (column statistics recomputed)."""
        return TrainingSet(self.predictors[:n], self.yields[:n])


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedManhattan:
    """Sum of weighted absolute differences over the non-label components."""

    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))
        if any(not np.isfinite(x) or x < 0 for x in self.weights):
            raise ValueError("weights must be finite and non-negative")


@dataclass(frozen=True)
class StdNormalizedEuclidean:
    """Euclidean distance after dividing each component by its column std.

    Components whose training column is constant (std 0) are dropped.
    """


@dataclass(frozen=True)
class ComponentAbsDiff:
    component: int = 0


Variant = Union[WeightedManhattan, StdNormalizedEuclidean, ComponentAbsDiff]


@dataclass(frozen=True)
class MetricSpec:
    """Distance between predictor vectors plus optional month filtering.

    Parameters
    ----------
    variant : WeightedManhattan, StdNormalizedEuclidean or ComponentAbsDiff
    month_filter : bool
        Only records whose label component equals the query's are candidates.
    label_index : int or None
        Position of the month label.  ``WeightedManhattan`` skips it; the
        other variants treat it as an ordinary component.
    """

    variant: Variant
    month_filter: bool = False
    label_index: int | None = None

    def __post_init__(self):
        if self.month_filter and self.label_index is None:
            raise ValueError("month_filter requires label_index")

    def _check_dim(self, d: int) -> None:
        v = self.variant
        if self.label_index is not None and not 0 <= self.label_index < d:
            raise ValueError(f"label_index {self.label_index} out of range for dimension {d}")
        if isinstance(v, WeightedManhattan):
            expected = d - (self.label_index is not None)
            if len(v.weights) != expected:
                raise ValueError(
                    f"WeightedManhattan needs {expected} weights for dimension {d}, got {len(v.weights)}"
                )
        elif isinstance(v, ComponentAbsDiff) and not 0 <= v.component < d:
            raise ValueError(f"component {v.component} out of range for dimension {d}")

    def distances(self, queries: np.ndarray, points: np.ndarray, stds=None) -> np.ndarray:
        """Distance matrix between ``queries (B, d)`` and ``points (N, d)``.

        ``stds`` is required by the normalised Euclidean variant; it is
        normally ``TrainingSet.stds``.
        """
        q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        w = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if q.shape[1] != w.shape[1]:
            raise ValueError(f"dimension mismatch: query has {q.shape[1]}, training has {w.shape[1]}")
        self._check_dim(q.shape[1])
        v = self.variant
        if isinstance(v, ComponentAbsDiff):
            c = v.component
            return np.abs(q[:, None, c] - w[None, :, c])
        if isinstance(v, WeightedManhattan):
            cols = [j for j in range(q.shape[1]) if j != self.label_index]
            out = np.zeros((q.shape[0], w.shape[0]))
            for wt, j in zip(v.weights, cols):
                out += wt * np.abs(q[:, None, j] - w[None, :, j])
            return out
        if isinstance(v, StdNormalizedEuclidean):
            if stds is None:
                raise ValueError("StdNormalizedEuclidean needs column standard deviations")
            out = np.zeros((q.shape[0], w.shape[0]))
            for j, s in enumerate(np.asarray(stds, dtype=np.float64)):
                if s > 0:
                    out += ((q[:, None, j] - w[None, :, j]) / s) ** 2
            return np.sqrt(out)
        raise TypeError(f"unknown metric variant {v!r}")

    def distance(self, a, b, stds=None) -> float:
        return float(self.distances(np.atleast_2d(a), np.atleast_2d(b), stds)[0, 0])


# --------------------------------------------------------------------------
# rank distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RankDistribution:
    """Probabilities ``p[i]`` of selecting the neighbour at rank ``i``."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64).reshape(-1)
        if p.size == 0:
            raise ValueError("rank distribution is empty")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probabilities", _frozen(p))

    @property
    def n(self) -> int:
        return self.probabilities.shape[0]

    @property
    def support_size(self) -> int:
        """k: one past the last rank with positive probability."""
        return int(np.flatnonzero(self.probabilities > 0)[-1]) + 1

    @property
    def support(self) -> np.ndarray:
        return self.probabilities[: self.support_size]

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.support)

    def key(self) -> bytes:
        return self.probabilities.tobytes()

    def __eq__(self, other):
        if not isinstance(other, RankDistribution):
            return NotImplemented
        return np.array_equal(self.probabilities, other.probabilities)

    def __hash__(self):
        return hash(self.key())

    @classmethod
    def top_k_uniform(cls, k: int, n: int) -> "RankDistribution":
        _check_k(k, n)
        p = np.zeros(n)
        p[:k] = 1.0 / k
        return cls(p)

    @classmethod
    def harmonic(cls, k: int, n: int) -> "RankDistribution":
        """p_i proportional to 1/i over the first k ranks."""
        _check_k(k, n)
        w = 1.0 / np.arange(1, k + 1)
        p = np.zeros(n)
        p[:k] = w / w.sum()
        return cls(p)

    @classmethod
    def explicit(cls, probabilities: Sequence[float]) -> "RankDistribution":
        return cls(np.asarray(probabilities, dtype=np.float64))


def _check_k(k: int, n: int) -> None:
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f"k must be an integer in [1, {n}], got {k}")


def make_rank_distribution(kind: str, n: int, k: int | None = None, p=None) -> RankDistribution:
    """Build a rank distribution by name: ``top_k_uniform``, ``harmonic`` or ``explicit``."""
    if kind in ("top_k_uniform", "topk"):
        return RankDistribution.top_k_uniform(k, n)
    if kind == "harmonic":
        return RankDistribution.harmonic(k, n)
    if kind == "explicit":
        rd = RankDistribution.explicit(p)
        if rd.n > n:
            raise ValueError(f"explicit distribution has {rd.n} entries for {n} records")
        return rd
    raise ValueError(f"unknown rank distribution kind {kind!r}")


# --------------------------------------------------------------------------
# ranking
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NeighborRanking:
    permutation: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return self.permutation.shape[0]

    def prefix(self, k: int) -> tuple:
        return tuple(int(i) for i in self.permutation[:k])


def _candidates(v: np.ndarray, ts: TrainingSet, m: MetricSpec) -> np.ndarray:
    if not m.month_filter:
        return np.arange(ts.n)
    cand = np.flatnonzero(ts.predictors[:, m.label_index] == v[m.label_index])
    if cand.size == 0:
        raise ValueError(f"no training record has month label {v[m.label_index]:g}")
    return cand


def rank_neighbors(v, ts: TrainingSet, m: MetricSpec) -> NeighborRanking:
    """Order candidate training indices by distance to ``v``.

    Ties are broken by ascending training index.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != ts.dim:
        raise ValueError(f"dimension mismatch: query has {v.shape[0]}, training has {ts.dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("query components must be finite")
    cand = _candidates(v, ts, m)
    d = m.distances(v[None, :], ts.predictors[cand], ts.stds)[0]
    order = np.argsort(d, kind="stable")
    return NeighborRanking(_frozen(cand[order]), _frozen(d[order]))


def rank_prefixes(series, ts: TrainingSet, m: MetricSpec, k: int) -> np.ndarray:
    """First ``k`` ranked training indices for every row of ``series``.

    Identical query rows are ranked once.  The result equals
    ``rank_neighbors(v, ts, m).permutation[:k]`` row by row.
    """
    q = np.asarray(series, dtype=np.float64)
    if q.ndim == 1:
        q = q[:, None]
    if q.shape[0] == 0:
        raise ValueError("series is empty")
    if q.shape[1] != ts.dim:
        raise ValueError(f"dimension mismatch: series has {q.shape[1]}, training has {ts.dim}")
    if not np.all(np.isfinite(q)):
        raise ValueError("series components must be finite")
    uniq, inverse = np.unique(q, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    out = np.empty((uniq.shape[0], k), dtype=np.intp)
    if m.month_filter:
        labels = uniq[:, m.label_index]
        groups = [(lab, np.flatnonzero(labels == lab)) for lab in np.unique(labels)]
    else:
        groups = [(None, np.arange(uniq.shape[0]))]
    for lab, rows in groups:
        if lab is None:
            cand = np.arange(ts.n)
        else:
            cand = np.flatnonzero(ts.predictors[:, m.label_index] == lab)
            if cand.size == 0:
                raise ValueError(f"no training record has month label {lab:g}")
        if cand.size < k:
            raise ValueError(f"only {cand.size} candidate records for a rank support of {k}")
        pts = ts.predictors[cand]
        for start in range(0, rows.size, _BLOCK):
            blk = rows[start : start + _BLOCK]
            d = m.distances(uniq[blk], pts, ts.stds)
            order = np.argsort(d, axis=1, kind="stable")[:, :k]
            out[blk] = cand[order]
    return out[inverse]


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


def select_ranks(rd: RankDistribution, u) -> np.ndarray:
    """Inverse-CDF rank selection: smallest ``i`` with ``cumsum(p)[i] > u``.

    A variate at or above the rounded final cumulative sum maps to the last
    supported rank.
    """
    cdf = rd.cumulative
    idx = np.searchsorted(cdf, np.asarray(u), side="right")
    return np.minimum(idx, cdf.shape[0] - 1)


def sample_rank(rd: RankDistribution, sampler: SeededSampler, t: int) -> int:
    """Draw one 0-based rank for time step ``t`` of ``sampler``'s run."""
    return int(select_ranks(rd, sampler.uniform(t)))


def _series_array(series) -> np.ndarray:
    q = np.asarray(series, dtype=np.float64)
    if q.ndim == 1:
        q = q[:, None]
    if q.shape[0] == 0:
        raise ValueError("series is empty")
    return q


def gknn_simulate(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution,
                  sampler: SeededSampler) -> np.ndarray:
    """One GkNN yield series for the predictor ``series`` of shape ``(T, d)``."""
    return gknn_simulate_runs(series, ts, m, rd, sampler.seed, [sampler.run_index])[0]


def gknn_simulate_runs(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution,
                       seed: int, run_indices, prefixes: np.ndarray | None = None) -> np.ndarray:
    """Yield series for several runs at once, shape ``(len(run_indices), T)``.

    Row ``r`` is identical to ``gknn_simulate`` with
    ``SeededSampler(seed, run_indices[r])``.  Pass precomputed ``prefixes``
    (from :func:`rank_prefixes`) to skip ranking.
    """
    q = _series_array(series)
    k = rd.support_size
    if prefixes is None:
        prefixes = rank_prefixes(q, ts, m, k)
    runs = np.asarray(run_indices).reshape(-1)
    t = np.arange(q.shape[0])
    u = counter_uniforms(seed, runs[:, None], t[None, :])
    ranks = select_ranks(rd, u)
    chosen = prefixes[t[None, :], ranks]
    return ts.yields[chosen]
