"""Multivariate Bayesian dynamic linear models for causal forecasting with synthetic controls."""
from .causal import (
    CounterfactualDraws,
    LiftSummary,
    StudyDesign,
    aggregate_lift,
    counterfactual_correlation,
    freeze_and_sample_paths,
    percent_lift_aggregate,
    percent_lift_per_unit,
    summarize_lift,
)
from .errors import (
    ArgumentError,
    ConfigError,
    DataError,
    DegenerateInputError,
    ImproperDistributionError,
    InsufficientDataError,
    MVDLMError,
    NumericError,
    StepError,
)
from .filter import (
    FilterState,
    FilterTrajectory,
    ModelSpec,
    evolve,
    filter_run,
    forecast_one_step,
    update,
)
from .model_set import (
    BMAWeights,
    ModelSetConfig,
    cumulative_weights,
    model_averaged_draws,
    run_model_set,
)
from .priors import PriorRecipe, prior_from_initial_window
from .sim import SimConfig, batch_regression_oracle, simulate_panel, univariate_dlm_oracle
from .stats import MultivariateT, NIWParams, mvt_log_density, mvt_sample, niw_sample
from .synth import ControlPanel, PCBasis, build_regressors, compute_pc_basis

__version__ = "0.1.0"
