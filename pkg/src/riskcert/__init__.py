"""riskcert: PAC-Bayesian transportation-bound risk certificates.

The library evaluates de-randomization costs, transportation increment
bounds, and deterministic risk certificates for spectrally normalized ReLU
networks, and ships the Monte Carlo verifiers that validate every bound it
computes at desk scale.
"""

__version__ = "0.1.0"

from .divergences import (
    DiagonalGaussian,
    kl_gaussian_cauchy_bound,
    kl_gaussian_gaussian,
)
from .errors import (
    AccuracyError,
    FormatError,
    InvalidInputError,
    RiskcertError,
    UnsupportedNormError,
    VerificationError,
)
from .harness import (
    ExperimentConfig,
    emit_report,
    run_certify,
    run_derand_cost,
    run_flow_sim,
    run_train_toy,
)
from .highprec import (
    high_precision_derand_cost,
    high_precision_entropy_integral,
    high_precision_reference_deviation,
)
from .mlp import (
    network_output,
    per_example_gradient,
    signal_decomposition,
    train_toy_mlp,
    zero_one_risk,
)
from .nn_cert import (
    NetworkWeights,
    contraction_velocity_bounds,
    derand_cost,
    gaussian_spectral_bound,
    gradient_norm_bound,
    metric_norm_bound,
    rebalance,
    risk_certificate,
    spectral_stats,
    stochastic_predictor,
    vc_baseline,
)
from .numerics import (
    DEFAULT_QUAD,
    QuadratureSpec,
    chaining_constant,
    complexity_tail_bound,
    complexity_tail_integral,
    entropy_integral,
    gaussian_spectral_factor,
    group_norm_pq,
    spectral_norm,
)
from .pac_core import (
    CentralitySpec,
    FiniteProcessWorld,
    abstract_pac_rhs,
    centrality_bennett,
    centrality_hoeffding,
    centrality_rademacher,
    subgaussian_pac_bound,
)
from .reports import Report, Table, config_hash, write_report
from .transport import (
    ContractionFlow,
    increment_bound,
    increment_coverage_check,
    ot_distance_upper,
    time_grid,
    wasserstein_velocity,
)
from .verify import run_verify_suite
from .weights_io import load_weights, save_weights
from .worlds import GaussianBlobTask, SquaredLossUniformWorld, make_coin_world

__all__ = [
    "AccuracyError",
    "FormatError",
    "InvalidInputError",
    "RiskcertError",
    "UnsupportedNormError",
    "VerificationError",
    "DEFAULT_QUAD",
    "QuadratureSpec",
    "chaining_constant",
    "complexity_tail_bound",
    "complexity_tail_integral",
    "entropy_integral",
    "gaussian_spectral_factor",
    "group_norm_pq",
    "spectral_norm",
    "DiagonalGaussian",
    "kl_gaussian_gaussian",
    "kl_gaussian_cauchy_bound",
    "CentralitySpec",
    "FiniteProcessWorld",
    "abstract_pac_rhs",
    "centrality_bennett",
    "centrality_hoeffding",
    "centrality_rademacher",
    "subgaussian_pac_bound",
    "GaussianBlobTask",
    "SquaredLossUniformWorld",
    "make_coin_world",
    "ContractionFlow",
    "increment_bound",
    "increment_coverage_check",
    "ot_distance_upper",
    "time_grid",
    "wasserstein_velocity",
    "NetworkWeights",
    "contraction_velocity_bounds",
    "derand_cost",
    "gaussian_spectral_bound",
    "gradient_norm_bound",
    "metric_norm_bound",
    "rebalance",
    "risk_certificate",
    "spectral_stats",
    "stochastic_predictor",
    "vc_baseline",
    "network_output",
    "per_example_gradient",
    "signal_decomposition",
    "train_toy_mlp",
    "zero_one_risk",
    "load_weights",
    "save_weights",
    "high_precision_derand_cost",
    "high_precision_entropy_integral",
    "high_precision_reference_deviation",
    "Report",
    "Table",
    "config_hash",
    "write_report",
    "ExperimentConfig",
    "emit_report",
    "run_certify",
    "run_derand_cost",
    "run_flow_sim",
    "run_train_toy",
    "run_verify_suite",
]
