"""Return-time statistics and extreme-value laws for 1-D systems.

Submodules
----------
dynamics       concrete maps (doubling, Manneville-Pomeau, rotation) and
               the synthetic Bernoulli process
measure        metric balls, invariant-measure estimates, scaling fits
return_stats   hit counting, empirical return-count laws, Poisson gap
short_returns  self-intersection horizons, the short-return center set,
               expansion-propagation checks
chenstein      binary-process Poisson approximation: exact pmf transport,
               the R1/R2 remainders, and the explicit error bound
evl            block maxima and the three classical extreme-value limits,
               plus mixing diagnostics for laws of rare exceedances
correlations   decay-of-correlation estimates and log-linear rate fits
oracle         independent closed-form references used by the test suite
cli            the ``ergostat`` experiment runner
"""

from .errors import (
    CapacityError,
    ComputationError,
    DegenerateBallError,
    ErgostatError,
    HorizonTooDeepError,
    InsufficientDataError,
    NumericalError,
    UnsupportedOperationError,
    ValidationError,
)
from .dynamics import (
    BERNOULLI_IID,
    DOUBLING,
    MANNEVILLE_POMEAU,
    ROTATION,
    MapSystem,
    PmStructure,
    bernoulli_iid,
    branch_preimages,
    doubling,
    manneville_pomeau,
    orbit_segment,
    pm_a_sequence,
    rotation,
    step,
)
from .measure import (
    AnnulusFit,
    Ball,
    DimensionFit,
    MeasureEstimate,
    RadiusMeasureTable,
    annulus_fit,
    annulus_ratio,
    ball_measure,
    build_radius_table,
    dimension_fit,
)
from .return_stats import (
    CountingConfig,
    HitHistogram,
    PoissonComparison,
    ShortReturnWarning,
    compare_poisson,
    count_visits,
    empirical_distribution,
    make_config,
)
from .short_returns import (
    IntervalUnion,
    ReturnGapResult,
    ShortReturnConfig,
    check_sp_inclusion,
    compute_s_p,
    default_a_frak,
    horizon_J,
    interval_image,
    measure_V,
    min_return_gap,
    short_return_config,
)
from .chenstein import (
    ChenSteinReport,
    DynamicalBinaryProcess,
    MarkovBinaryProcess,
    agg_bound,
    dynamical_process,
    exact_count_distribution,
    iid_process,
    r1_estimate,
    r2_estimate,
    stationary_distribution,
    theorem_bound,
)
from .evl import (
    TYPE_FRECHET,
    TYPE_GUMBEL,
    TYPE_WEIBULL,
    EvlLevels,
    EvlResult,
    ObservableSpec,
    block_maxima,
    d2_gamma,
    dprime_sum,
    exceedance_radius,
    levels,
    levels_type1,
    limit_cdf,
    observable_eval,
    tau_value,
)
from .correlations import (
    CorrEstimate,
    DecayFit,
    correlation,
    decay_fit,
    default_budget,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ErgostatError", "ValidationError", "UnsupportedOperationError",
    "DegenerateBallError", "ComputationError", "NumericalError",
    "CapacityError", "InsufficientDataError", "HorizonTooDeepError",
    # dynamics
    "DOUBLING", "MANNEVILLE_POMEAU", "ROTATION", "BERNOULLI_IID",
    "MapSystem", "doubling", "manneville_pomeau", "rotation", "bernoulli_iid",
    "step", "orbit_segment", "branch_preimages", "PmStructure", "pm_a_sequence",
    # measure
    "Ball", "MeasureEstimate", "ball_measure", "DimensionFit", "dimension_fit",
    "AnnulusFit", "annulus_fit", "annulus_ratio", "RadiusMeasureTable",
    "build_radius_table",
    # return statistics
    "CountingConfig", "make_config", "count_visits", "HitHistogram",
    "empirical_distribution", "PoissonComparison", "compare_poisson",
    "ShortReturnWarning",
    # short returns
    "default_a_frak", "horizon_J", "ShortReturnConfig", "short_return_config",
    "IntervalUnion", "interval_image", "ReturnGapResult", "min_return_gap",
    "measure_V", "compute_s_p", "check_sp_inclusion",
    # binary-process Poisson approximation
    "MarkovBinaryProcess", "iid_process", "DynamicalBinaryProcess",
    "dynamical_process", "stationary_distribution", "exact_count_distribution",
    "r1_estimate", "r2_estimate", "ChenSteinReport", "theorem_bound",
    "agg_bound",
    # extreme values
    "TYPE_GUMBEL", "TYPE_FRECHET", "TYPE_WEIBULL", "ObservableSpec",
    "tau_value", "limit_cdf", "observable_eval", "EvlLevels", "levels",
    "levels_type1", "exceedance_radius", "EvlResult", "block_maxima",
    "d2_gamma", "dprime_sum",
    # correlations
    "CorrEstimate", "correlation", "DecayFit", "decay_fit", "default_budget",
]
