"""Generalized k-nearest-neighbour (GkNN) temporal upscaling."""

__version__ = "0.1.0"

from .analytics import (
    AnnualMoments,
    MomentReport,
    MonthMoments,
    annual_moments,
    base_error_bound,
    base_error_map,
    expected_month_error,
    expected_month_yield,
    moment_report,
    month_variance,
    total_expected_error,
)
from .core import (
    ComponentAbsDiff,
    MetricSpec,
    NeighborRanking,
    RankDistribution,
    StdNormalizedEuclidean,
    TrainingRecord,
    TrainingSet,
    WeightedManhattan,
    gknn_simulate,
    gknn_simulate_runs,
    make_rank_distribution,
    rank_neighbors,
    rank_prefixes,
    sample_rank,
)
from .distribution import EmpiricalDistribution, estimate_nu, limit_annual_yield, limit_m_var
from .empirical import EnsembleResult, compare_to_analytic, run_ensemble
from .kernel import (
    DiscreteKernel,
    SyntheticProcess,
    convergence_experiment,
    eval_discrete_kernel,
    generate_synthetic_series,
)
from .rng import SeededSampler, counter_uniforms
from .tank import DailyClimate, TankConfig, aggregate_monthly, simulate_tank, synthetic_daily_climate
from .upscaling import (
    BandIndex,
    MonthlyQueryRecord,
    MonthlyTrainingRecord,
    upscale,
    upscale_bootstrap,
    upscale_knn,
    upscale_modified_bootstrap,
    upscale_nn,
)
