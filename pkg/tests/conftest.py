import numpy as np
import pytest

from gknn.core import MetricSpec, StdNormalizedEuclidean, TrainingSet
from gknn.tank import TankConfig, aggregate_monthly, simulate_tank, synthetic_daily_climate


def _days(start_year, years):
    start = np.datetime64(f"{start_year}-01-01")
    return int((np.datetime64(f"{start_year + years}-01-01") - start).astype(int))


def tank_months(start_year, years, seed, schema="knn", cfg=None):
    climate = synthetic_daily_climate(f"{start_year}-01-01", _days(start_year, years), seed)
    res = simulate_tank(climate, cfg or TankConfig())
    return aggregate_monthly(climate, res.yields, schema)


def knn_arrays(records):
    """(month_label, rain) predictor rows and yields of knn-schema records."""
    x = np.array([(r.month_label, r.climatic_variables[0]) for r in records], dtype=float)
    y = np.array([r.yield_l for r in records])
    return x, y


@pytest.fixture(scope="session")
def tank_fixture():
    """36 training months (3 years), 24 query months (2 years) with actual yields."""
    train = tank_months(1900, 3, seed=11)
    query = tank_months(1950, 2, seed=12)
    w, u = knn_arrays(train)
    v, z = knn_arrays(query)
    ts = TrainingSet(w, u)
    metric = MetricSpec(StdNormalizedEuclidean(), label_index=0)
    return ts, metric, v, z
