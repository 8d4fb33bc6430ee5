"""From daily tank simulation to upscaled monthly yields.

Run with ``python3 demos/04_rainwater_tank_upscaling.py``.
"""
# %%
import numpy as np

from gknn.tank import TankConfig, aggregate_monthly, simulate_tank, synthetic_daily_climate
from gknn.upscaling import MonthlyQueryRecord, upscale

cfg = TankConfig(capacity=5000, roof_area=150)
train_climate = synthetic_daily_climate("1900-01-01", 365 * 20 + 4, 3)
daily = simulate_tank(train_climate, cfg)
print("daily supply fraction:", round(daily.yields.sum() / daily.demand.sum(), 3))

# %%
# The same run seen through each monthly schema.
tables = {s: aggregate_monthly(train_climate, daily.yields, s) for s in ("coombes", "knn", "bootstrap")}
print(len(tables["coombes"]), "training months; first record:", tables["coombes"][0])

# %%
# A future climate record with no tank run: predict its monthly yields.
future = synthetic_daily_climate("2050-01-01", 365 * 2, 4)
truth = aggregate_monthly(future, simulate_tank(future, cfg).yields, "coombes")
actual = np.array([r.yield_l for r in truth])
for method, schema in (("nn", "coombes"), ("knn", "knn"), ("bootstrap", "bootstrap"),
                       ("modified-bootstrap", "bootstrap")):
    q = [MonthlyQueryRecord(r.month_label, r.climatic_variables)
         for r in aggregate_monthly(future, np.zeros(len(future)), schema)]
    y = upscale(method, q, tables[schema], k=5, seed=2, runs=200)
    rmse = np.sqrt(np.mean((y - actual) ** 2))
    print(f"{method:>18}: mean annual {y.sum(axis=1).mean() / 2:9.0f} L, RMSE {rmse:7.0f} L")
print(f"{'actual':>18}: mean annual {actual.sum() / 2:9.0f} L")
