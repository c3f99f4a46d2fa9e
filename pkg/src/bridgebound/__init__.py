"""Monte Carlo pricing of multi-asset options with continuous barriers.

Discrete-time simulation misses barrier crossings between sampling dates.
This package removes that bias by conditioning on the simulated endpoints
of each interval: the hit probability of a single barrier is known in
closed form given the endpoints, and with several active barriers the
joint no-hit probability is bracketed between sharp bounds (and estimated
under an independence approximation).  Path weights built from these
probabilities turn a coarse discrete simulation into estimators that
bracket the continuously monitored price.
"""

from .bridge import (
    BridgeWeights,
    IntervalContext,
    frechet_bounds,
    independent_no_hit,
    interval_weights,
    marginal_no_hit,
    oracle_no_hit,
    sample_extremum,
    xi,
)
from .estimators import (
    EstimatorResult,
    PointEstimate,
    PricingReport,
    confidence_interval,
    discrete_barrier_interpolate,
    knock_in_price,
    path_contributions,
    point_estimators,
    price,
    rebate_price,
)
from .harness import (
    ConvergenceFit,
    SweepSpec,
    TableReport,
    fit_convergence,
    fit_from_csv,
    reproduce_table,
    run_sweep,
)
from .model import (
    MarketModel,
    ModelError,
    OptionSpec,
    Regime,
    TimeGrid,
    ValidationReport,
    config_path,
    factor_correlation,
    load_config,
    validate,
)
from .simulate import CHUNK, PathBatch, PathState, path_batches, simulate_path, step

__all__ = [
    "BridgeWeights",
    "CHUNK",
    "ConvergenceFit",
    "EstimatorResult",
    "IntervalContext",
    "MarketModel",
    "ModelError",
    "OptionSpec",
    "PathBatch",
    "PathState",
    "PointEstimate",
    "PricingReport",
    "Regime",
    "SweepSpec",
    "TableReport",
    "TimeGrid",
    "ValidationReport",
    "config_path",
    "confidence_interval",
    "discrete_barrier_interpolate",
    "factor_correlation",
    "fit_convergence",
    "fit_from_csv",
    "frechet_bounds",
    "independent_no_hit",
    "interval_weights",
    "knock_in_price",
    "load_config",
    "marginal_no_hit",
    "oracle_no_hit",
    "path_batches",
    "path_contributions",
    "point_estimators",
    "price",
    "rebate_price",
    "reproduce_table",
    "run_sweep",
    "sample_extremum",
    "simulate_path",
    "step",
    "validate",
    "xi",
]

__version__ = "0.1.0"
