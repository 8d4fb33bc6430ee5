"""Closed-form moments of GkNN output, computed without simulation.

For a fixed query the GkNN draw is a discrete distribution over the ranked
neighbour yields, so its mean, variance and expected squared error have
exact expressions.  Summing over months gives the annual statistics; since
the rank draws at different months are independent, the variance of the
annual average is the sum of monthly variances divided by ``m**2``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .core import MetricSpec, NeighborRanking, RankDistribution, TrainingSet, rank_prefixes

__all__ = [
    "MonthMoments",
    "AnnualMoments",
    "MomentReport",
    "expected_month_yield",
    "month_variance",
    "expected_month_error",
    "total_expected_error",
    "base_error_map",
    "base_error_bound",
    "annual_moments",
    "moment_report",
    "series_class_stats",
    "provenance_digest",
    "weighted_moments",
]

# The bound is attained exactly by a single-class series; allow for rounding.
_BOUND_RTOL = 1e-12


@dataclass(frozen=True)
class MonthMoments:
    t: int
    expected_yield: float
    variance: float
    bias_sq: float | None = None
    expected_error: float | None = None

    @property
    def base_error(self) -> float:
        return self.variance

    @property
    def prediction_error(self) -> float | None:
        return self.bias_sq


@dataclass(frozen=True)
class AnnualMoments:
    m: int
    expected_annual_yield: float
    variance: float
    variance_constant: float
    bound_ok: bool
    total_yield_variance: float

    @property
    def bound(self) -> float:
        return self.variance_constant / self.m


@dataclass(frozen=True)
class MomentReport:
    months: list
    annual: AnnualMoments | None
    provenance: str = field(default="", compare=False)

    @property
    def expected_yields(self) -> np.ndarray:
        return np.array([mm.expected_yield for mm in self.months])

    @property
    def variances(self) -> np.ndarray:
        return np.array([mm.variance for mm in self.months])

    @property
    def expected_errors(self) -> np.ndarray | None:
        if self.months and self.months[0].expected_error is None:
            return None
        return np.array([mm.expected_error for mm in self.months])

    @property
    def total_expected_error(self) -> float | None:
        e = self.expected_errors
        return None if e is None else float(e.sum())


def provenance_digest(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution) -> str:
    """Short digest identifying the inputs a report or ensemble came from."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(series, dtype=np.float64).tobytes())
    h.update(ts.predictors.tobytes())
    h.update(ts.yields.tobytes())
    h.update(repr(m).encode())
    h.update(rd.key())
    return h.hexdigest()[:16]


def _ranked_support(ranking, ts: TrainingSet, rd: RankDistribution):
    perm = ranking.permutation if isinstance(ranking, NeighborRanking) else np.asarray(ranking)
    k = rd.support_size
    if perm.shape[0] < k:
        raise ValueError(f"ranking has {perm.shape[0]} entries but the distribution needs {k}")
    return ts.yields[perm[:k]], rd.support


def weighted_moments(u: np.ndarray, p: np.ndarray):
    """Mean and variance of yields ``u[..., k]`` drawn with rank weights ``p``.

    Moments are taken about the nearest yield so that a neighbourhood of
    equal yields gives exactly that yield and zero variance.
    """
    u = np.asarray(u, dtype=np.float64)
    ref = u[..., :1]
    d = u - ref
    mean = ref[..., 0] + d @ p
    var = ((u - mean[..., None]) ** 2) @ p
    return mean, var


def _mean_var(u: np.ndarray, p: np.ndarray) -> tuple:
    mean, var = weighted_moments(u, p)
    return float(mean), float(var)


def expected_month_yield(ranking, ts: TrainingSet, rd: RankDistribution) -> float:
    u, p = _ranked_support(ranking, ts, rd)
    return _mean_var(u, p)[0]


def month_variance(ranking, ts: TrainingSet, rd: RankDistribution) -> float:
    u, p = _ranked_support(ranking, ts, rd)
    return _mean_var(u, p)[1]


def expected_month_error(ranking, ts: TrainingSet, rd: RankDistribution, z_t: float,
                         t: int = 0) -> MonthMoments:
    """Expected squared error against the actual yield ``z_t``.

    ``expected_error = variance + bias_sq``; ``variance`` is the base part
    and ``bias_sq`` the prediction part of the split.
    """
    if not np.isfinite(z_t) or z_t < 0:
        raise ValueError("actual yield must be finite and non-negative")
    u, p = _ranked_support(ranking, ts, rd)
    mean, var = _mean_var(u, p)
    bias_sq = (mean - z_t) ** 2
    return MonthMoments(t, mean, var, bias_sq, var + bias_sq)


def series_class_stats(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution):
    """Per-month means and variances plus the ranking classes they fall in.

    Returns
    -------
    means, variances : ndarray, shape (T,)
    class_index : ndarray of int, shape (T,)
        Position of each month's ranking class in ``classes``.
    classes : ndarray, shape (n_classes, k)
        Distinct k-prefixes realised by the series, sorted lexicographically.
    """
    k = rd.support_size
    prefixes = rank_prefixes(series, ts, m, k)
    classes, class_index = np.unique(prefixes, axis=0, return_inverse=True)
    class_index = class_index.reshape(-1)
    cmean, cvar = weighted_moments(ts.yields[classes], rd.support)
    return cmean[class_index], cvar[class_index], class_index, classes


def total_expected_error(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution, z) -> float:
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    q = np.asarray(series, dtype=np.float64)
    if q.shape[0] != z.shape[0]:
        raise ValueError(f"series has {q.shape[0]} steps but {z.shape[0]} actual yields")
    means, variances, _, _ = series_class_stats(q, ts, m, rd)
    return float(np.sum(variances + (means - z) ** 2))


def base_error_map(v, ts: TrainingSet, m: MetricSpec, rd: RankDistribution) -> float:
    """Variance of the GkNN draw at an arbitrary predictor vector ``v``."""
    v = np.asarray(v, dtype=np.float64).reshape(1, -1)
    prefix = rank_prefixes(v, ts, m, rd.support_size)[0]
    return _mean_var(ts.yields[prefix], rd.support)[1]


def base_error_bound(ts: TrainingSet, sharp: bool = False) -> float:
    """Upper bound on the base error map.

    The coarse bound is ``N (1 + N)**2 u_max**2``; ``sharp=True`` gives
    ``u_max**2 / 4``, the largest variance of any law on ``[0, u_max]``.
    """
    umax = float(ts.yields.max())
    if sharp:
        return umax**2 / 4.0
    n = ts.n
    return n * (1.0 + n) ** 2 * umax**2


def _annual_from_stats(means, variances, class_index, classes, ts, rd) -> AnnualMoments:
    T = means.shape[0]
    if T % 12:
        raise ValueError(f"series length {T} is not a whole number of years")
    m = T // 12
    expected = float(means.sum()) / m
    var = float(variances.sum()) / m**2
    _, cvar = weighted_moments(ts.yields[classes], rd.support)
    C = 12.0 * float(cvar.sum())
    return AnnualMoments(
        m=m,
        expected_annual_yield=expected,
        variance=var,
        variance_constant=C,
        bound_ok=bool(var <= C / m * (1.0 + _BOUND_RTOL)),
        total_yield_variance=m**2 * var,
    )


def annual_moments(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution) -> AnnualMoments:
    """Mean and variance of the simulated average annual yield.

    ``variance_constant`` sums per-class variances over the ranking classes
    the series actually visits, times 12, so that ``variance <= C / m``.
    """
    q = np.asarray(series, dtype=np.float64)
    if q.shape[0] % 12:
        raise ValueError(f"series length {q.shape[0]} is not a whole number of years")
    return _annual_from_stats(*series_class_stats(q, ts, m, rd), ts, rd)


def moment_report(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution,
                  actual=None) -> MomentReport:
    """Monthly moments for every step, plus annual moments when ``T % 12 == 0``."""
    q = np.asarray(series, dtype=np.float64)
    means, variances, class_index, classes = series_class_stats(q, ts, m, rd)
    T = means.shape[0]
    if actual is not None:
        z = np.asarray(actual, dtype=np.float64).reshape(-1)
        if z.shape[0] != T:
            raise ValueError(f"series has {T} steps but {z.shape[0]} actual yields")
        if not np.all(np.isfinite(z)) or np.any(z < 0):
            raise ValueError("actual yields must be finite and non-negative")
        bias = (means - z) ** 2
        months = [
            MonthMoments(t, float(means[t]), float(variances[t]), float(bias[t]),
                         float(variances[t] + bias[t]))
            for t in range(T)
        ]
    else:
        months = [MonthMoments(t, float(means[t]), float(variances[t])) for t in range(T)]
    annual = None
    if T % 12 == 0:
        annual = _annual_from_stats(means, variances, class_index, classes, ts, rd)
    return MomentReport(months, annual, provenance_digest(q, ts, m, rd))
