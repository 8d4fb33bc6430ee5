"""Closed-form moments checked against a Monte Carlo ensemble.

Run with ``python3 demos/02_moments_vs_monte_carlo.py``.
"""
# %%
import numpy as np

from gknn import (
    MetricSpec,
    RankDistribution,
    StdNormalizedEuclidean,
    TrainingSet,
    compare_to_analytic,
    moment_report,
    run_ensemble,
)
from gknn.tank import TankConfig, aggregate_monthly, simulate_tank, synthetic_daily_climate


def months(start, days, seed):
    c = synthetic_daily_climate(start, days, seed)
    recs = aggregate_monthly(c, simulate_tank(c, TankConfig()).yields, "knn")
    x = np.array([(r.month_label, r.climatic_variables[0]) for r in recs])
    return x, np.array([r.yield_l for r in recs])


# Three training years and a two-year query period.
w, u = months("1900-01-01", 1096, 11)
v, z = months("1950-01-01", 730, 12)
ts = TrainingSet(w, u)
metric = MetricSpec(StdNormalizedEuclidean(), label_index=0)
rd = RankDistribution.harmonic(3, ts.n)

# %%
report = moment_report(v, ts, metric, rd, actual=z)
print("expected annual yield:", round(report.annual.expected_annual_yield, 1))
print("Var(Y):", round(report.annual.variance, 1), " C/m:", round(report.annual.bound, 1))
print("total expected error:", round(report.total_expected_error, 1))

# %%
ens = run_ensemble(v, ts, metric, rd, seed=1, R=20000, actual=z)
rows = compare_to_analytic(ens, report)
worst = max(rows, key=lambda r: abs(r.z))
print(f"{len(rows)} comparisons, largest |z| = {abs(worst.z):.2f} ({worst.quantity}, t={worst.t})")
print("flagged:", [(r.quantity, r.t) for r in rows if r.flagged])
