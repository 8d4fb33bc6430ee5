"""Monte Carlo ensembles of GkNN runs and their comparison with analytics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytics import MomentReport, provenance_digest
from .core import MetricSpec, RankDistribution, TrainingSet, gknn_simulate_runs, rank_prefixes

__all__ = ["EnsembleResult", "ComparisonRow", "run_ensemble", "compare_to_analytic"]

DEFAULT_CHUNK = 4096


class _PowerSums:
    """Shifted power sums S1..S4 of a quantity, mergeable by addition."""

    def __init__(self, shift):
        self.shift = np.asarray(shift, dtype=np.float64)
        self.n = 0
        self.s = [np.zeros_like(self.shift) for _ in range(4)]

    def add(self, x: np.ndarray) -> None:
        d = x - self.shift
        d2 = d * d
        self.n += x.shape[0]
        self.s[0] += d.sum(axis=0)
        self.s[1] += d2.sum(axis=0)
        self.s[2] += (d2 * d).sum(axis=0)
        self.s[3] += (d2 * d2).sum(axis=0)

    def stats(self):
        """Mean, unbiased variance and their standard errors."""
        n = self.n
        a1, a2, a3, a4 = (s / n for s in self.s)
        mean_d = a1
        m2 = np.maximum(a2 - a1**2, 0.0)
        m4 = a4 - 4 * a3 * a1 + 6 * a2 * a1**2 - 3 * a1**4
        var = m2 * n / (n - 1)
        se_mean = np.sqrt(var / n)
        se_var = np.sqrt(np.maximum(m4 - m2**2, 0.0) / n)
        return self.shift + mean_d, var, se_mean, se_var


@dataclass(frozen=True)
class EnsembleResult:
    """Sample moments over ``R`` GkNN runs.

    Standard errors of means are ``sd / sqrt(R)``; those of variances use
    the large-sample formula ``sqrt((m4 - m2**2) / R)``.  ``annual_*`` are
    ``None`` when the series is not a whole number of years, ``*_error``
    fields are ``None`` when no actual yields were given.
    """

    R: int
    per_t_mean: np.ndarray
    per_t_var: np.ndarray
    per_t_mean_se: np.ndarray
    per_t_var_se: np.ndarray
    annual_mean: float | None = None
    annual_var: float | None = None
    annual_mean_se: float | None = None
    annual_var_se: float | None = None
    per_t_error: np.ndarray | None = None
    per_t_error_se: np.ndarray | None = None
    total_error: float | None = None
    total_error_se: float | None = None
    provenance: str = ""

    @property
    def standard_errors(self) -> np.ndarray:
        return self.per_t_mean_se


def _simulate_chunk(args):
    q, ts, m, rd, seed, runs, prefixes = args
    return gknn_simulate_runs(q, ts, m, rd, seed, runs, prefixes=prefixes)


def run_ensemble(series, ts: TrainingSet, m: MetricSpec, rd: RankDistribution, seed: int, R: int,
                 actual=None, workers: int = 1, chunk_size: int = DEFAULT_CHUNK) -> EnsembleResult:
    """Simulate runs ``1..R`` and aggregate their sample moments.

    Runs are generated in fixed chunks of ``chunk_size`` run indices and
    merged in run-index order, so the aggregates do not depend on
    ``workers``.
    """
    if R < 2:
        raise ValueError("an ensemble needs R >= 2 runs")
    q = np.asarray(series, dtype=np.float64)
    if q.ndim == 1:
        q = q[:, None]
    T = q.shape[0]
    z = None
    if actual is not None:
        z = np.asarray(actual, dtype=np.float64).reshape(-1)
        if z.shape[0] != T:
            raise ValueError(f"series has {T} steps but {z.shape[0]} actual yields")
    prefixes = rank_prefixes(q, ts, m, rd.support_size)
    annual = T % 12 == 0
    years = T // 12

    starts = range(1, R + 1, chunk_size)
    jobs = [(q, ts, m, rd, seed, np.arange(s, min(s + chunk_size, R + 1)), prefixes) for s in starts]

    first = _simulate_chunk((q, ts, m, rd, seed, np.array([1]), prefixes))[0]
    acc_y = _PowerSums(first)
    acc_Y = _PowerSums(first.sum() / years) if annual else None
    acc_e = acc_E = None
    if z is not None:
        e0 = (first - z) ** 2
        acc_e = _PowerSums(e0)
        acc_E = _PowerSums(e0.sum())

    def consume(y):
        acc_y.add(y)
        if annual:
            acc_Y.add(y.sum(axis=1) / years)
        if z is not None:
            e = (y - z) ** 2
            acc_e.add(e)
            acc_E.add(e.sum(axis=1))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for y in pool.map(_simulate_chunk, jobs):
                consume(y)
    else:
        for job in jobs:
            consume(_simulate_chunk(job))

    mean, var, se_mean, se_var = acc_y.stats()
    kw = {}
    if annual:
        Ym, Yv, Ym_se, Yv_se = (float(x) for x in acc_Y.stats())
        kw.update(annual_mean=Ym, annual_var=Yv, annual_mean_se=Ym_se, annual_var_se=Yv_se)
    if z is not None:
        em, _, em_se, _ = acc_e.stats()
        Em, _, Em_se, _ = acc_E.stats()
        kw.update(per_t_error=em, per_t_error_se=em_se, total_error=float(Em), total_error_se=float(Em_se))
    return EnsembleResult(R, mean, var, se_mean, se_var, provenance=provenance_digest(q, ts, m, rd), **kw)


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    t: int | None
    empirical: float
    analytic: float
    se: float
    z: float
    flagged: bool


def _z(emp: float, ana: float, se: float) -> float:
    diff = emp - ana
    if se > 0:
        return diff / se
    scale = max(abs(emp), abs(ana), 1.0)
    if abs(diff) <= 1e-12 * scale:
        return 0.0
    return float(np.copysign(np.inf, diff))


def compare_to_analytic(e: EnsembleResult, a: MomentReport, threshold: float = 4.0) -> list:
    """Z-score every empirical quantity against its closed-form value.

    Rows with ``|z| > threshold`` are flagged.  A zero standard error gives
    ``z = 0`` when both sides agree and ``+-inf`` otherwise.
    """
    if e.provenance and a.provenance and e.provenance != a.provenance:
        raise ValueError("ensemble and moment report come from different inputs")
    T = len(a.months)
    if e.per_t_mean.shape[0] != T:
        raise ValueError(f"ensemble has {e.per_t_mean.shape[0]} steps, report has {T}")
    rows = []

    def add(name, t, emp, ana, se):
        zz = _z(float(emp), float(ana), float(se))
        rows.append(ComparisonRow(name, t, float(emp), float(ana), float(se), zz, bool(abs(zz) > threshold)))

    for t, mm in enumerate(a.months):
        add("mean", t, e.per_t_mean[t], mm.expected_yield, e.per_t_mean_se[t])
        add("variance", t, e.per_t_var[t], mm.variance, e.per_t_var_se[t])
        if e.per_t_error is not None and mm.expected_error is not None:
            add("error", t, e.per_t_error[t], mm.expected_error, e.per_t_error_se[t])
    if a.annual is not None and e.annual_mean is not None:
        add("annual_mean", None, e.annual_mean, a.annual.expected_annual_yield, e.annual_mean_se)
        add("annual_variance", None, e.annual_var, a.annual.variance, e.annual_var_se)
    if e.total_error is not None and a.total_expected_error is not None:
        add("total_error", None, e.total_error, a.total_expected_error, e.total_error_se)
    return rows
