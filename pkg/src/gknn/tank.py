"""Daily rainwater-tank water balance and monthly aggregation.

The tank follows a yield-before-spill rule: each day the inflow joins the
stored water, demand is served from the total, and whatever exceeds the
capacity afterwards spills.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .upscaling import SCHEMAS, MonthlyTrainingRecord

__all__ = [
    "TankConfig",
    "DailyClimateRecord",
    "DailyClimate",
    "TankResult",
    "simulate_tank",
    "aggregate_monthly",
    "synthetic_daily_climate",
    "RAIN_DAY_MM",
]

RAIN_DAY_MM = 1.0


@dataclass(frozen=True)
class TankConfig:
    capacity: float = 5000.0
    roof_area: float = 150.0
    runoff_coeff: float = 0.85
    base_demand: float = 200.0
    demand_temp_coeff: float = 0.02
    initial_storage: float = 0.0
    pivot_temp: float = 20.0

    def __post_init__(self):
        for name in ("capacity", "roof_area", "runoff_coeff", "base_demand", "demand_temp_coeff",
                     "initial_storage"):
            x = getattr(self, name)
            if not (np.isfinite(x) or (name == "capacity" and x == np.inf)) or x < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {x!r}")
        if not np.isfinite(self.pivot_temp):
            raise ValueError("pivot_temp must be finite")
        if self.runoff_coeff > 1:
            raise ValueError("runoff_coeff must lie in [0, 1]")
        if self.initial_storage > self.capacity:
            raise ValueError("initial_storage exceeds capacity")

    def demand(self, temperature):
        """Daily demand (L), growing linearly with heat above the pivot temperature."""
        excess = np.maximum(0.0, np.asarray(temperature, dtype=np.float64) - self.pivot_temp)
        return self.base_demand * (1.0 + self.demand_temp_coeff * excess)


@dataclass(frozen=True)
class DailyClimateRecord:
    date: dt.date
    rainfall: float
    temperature: float


@dataclass(frozen=True, eq=False)
class DailyClimate:
    """Contiguous daily record: dates (``datetime64[D]``), rainfall (mm), temperature (degC)."""

    dates: np.ndarray
    rainfall: np.ndarray
    temperature: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dates, dtype="datetime64[D]")
        r = np.asarray(self.rainfall, dtype=np.float64)
        tmp = np.asarray(self.temperature, dtype=np.float64)
        if d.size == 0:
            raise ValueError("climate record is empty")
        if not d.shape == r.shape == tmp.shape:
            raise ValueError("dates, rainfall and temperature must have equal length")
        steps = np.diff(d).astype(np.int64)
        if np.any(steps != 1):
            bad = int(np.flatnonzero(steps != 1)[0])
            raise ValueError(f"dates are not contiguous daily steps after {d[bad]}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rainfall must be finite and non-negative")
        if not np.all(np.isfinite(tmp)):
            raise ValueError("temperature must be finite")
        object.__setattr__(self, "dates", d)
        object.__setattr__(self, "rainfall", r)
        object.__setattr__(self, "temperature", tmp)

    @classmethod
    def from_records(cls, records) -> "DailyClimate":
        records = list(records)
        return cls(
            np.array([r.date for r in records], dtype="datetime64[D]"),
            np.array([r.rainfall for r in records], dtype=np.float64),
            np.array([r.temperature for r in records], dtype=np.float64),
        )

    def __len__(self):
        return self.dates.shape[0]


@dataclass(frozen=True, eq=False)
class TankResult:
    inflow: np.ndarray
    demand: np.ndarray
    yields: np.ndarray
    storage: np.ndarray
    spill: np.ndarray
    initial_storage: float


def simulate_tank(climate: DailyClimate, cfg: TankConfig) -> TankResult:
    """Run the daily balance; ``storage[i]`` is the volume at the end of day ``i``."""
    inflow = cfg.runoff_coeff * cfg.roof_area * climate.rainfall
    demand = cfg.demand(climate.temperature)
    n = len(climate)
    yields = np.empty(n)
    storage = np.empty(n)
    spill = np.empty(n)
    s = float(cfg.initial_storage)
    cap = cfg.capacity
    for i in range(n):
        available = s + inflow[i]
        y = min(demand[i], available)
        s_new = min(available - y, cap)
        yields[i] = y
        spill[i] = available - y - s_new
        storage[i] = s = s_new
    return TankResult(inflow, demand, yields, storage, spill, float(cfg.initial_storage))


def aggregate_monthly(climate: DailyClimate, daily_yields, schema: str = "coombes") -> list:
    """Calendar-month totals of yield and rainfall, rain-day counts and mean temperature."""
    if schema not in SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}; expected one of {sorted(SCHEMAS)}")
    y = np.asarray(daily_yields, dtype=np.float64)
    if y.shape != climate.rainfall.shape:
        raise ValueError(f"{y.shape[0]} daily yields for {len(climate)} climate days")
    months = climate.dates.astype("datetime64[M]")
    starts = np.flatnonzero(np.r_[True, months[1:] != months[:-1]])
    yield_sum = np.add.reduceat(y, starts)
    rain_sum = np.add.reduceat(climate.rainfall, starts)
    rain_days = np.add.reduceat((climate.rainfall >= RAIN_DAY_MM).astype(np.int64), starts)
    days = np.diff(np.r_[starts, len(climate)])
    temp_mean = np.add.reduceat(climate.temperature, starts) / days
    labels = months[starts].astype(np.int64) % 12 + 1

    out = []
    for i in range(starts.shape[0]):
        label = None if schema == "bootstrap" else int(labels[i])
        if schema == "coombes":
            cv = (temp_mean[i], float(rain_days[i]), rain_sum[i])
        else:
            cv = (rain_sum[i],)
        out.append(MonthlyTrainingRecord(label, cv, float(yield_sum[i])))
    return out


def synthetic_daily_climate(start: str | dt.date, days: int, seed: int = 0) -> DailyClimate:
    """Seasonal synthetic weather for fixtures and demos.

    Wet/dry occurrence follows a two-state Markov chain, wet-day depths are
    gamma distributed and temperature is a sinusoid plus noise; all
    seasonally modulated for a southern-hemisphere climate.
    """
    rng = np.random.default_rng(seed)
    dates = np.datetime64(start, "D") + np.arange(days)
    doy = (dates - dates.astype("datetime64[Y]")).astype(np.int64)
    phase = 2 * np.pi * doy / 365.25
    p_wet_wet = 0.55 + 0.1 * np.cos(phase - 3.3)
    p_dry_wet = 0.22 + 0.08 * np.cos(phase - 3.3)
    u = rng.random(days)
    wet = np.empty(days, dtype=bool)
    prev = False
    for i in range(days):
        prev = u[i] < (p_wet_wet[i] if prev else p_dry_wet[i])
        wet[i] = prev
    depth = rng.gamma(0.7, 8.0, size=days)
    rain = np.where(wet, np.round(depth, 1), 0.0)
    temp = np.round(17.0 + 6.0 * np.cos(phase - 0.3) + rng.normal(0.0, 3.0, size=days), 1)
    return DailyClimate(dates, rain, temp)
