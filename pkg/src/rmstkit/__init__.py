"""Covariate-adjusted restricted mean survival time analysis for randomized trials.

The package estimates treatment effects on restricted mean survival time
(RMST) three ways: directly from Kaplan-Meier curves, by ordinary least
squares on jackknife pseudovalues with baseline covariates, and in closed
form for planning purposes.  A scenario engine simulates trials end to end
so the planning formulas can be checked against Monte Carlo truth.
"""

from __future__ import annotations

from .errors import (
    ConfigError,
    DegenerateCovariate,
    InvalidInput,
    ParseError,
    RestrictionTimeBeyondData,
    RmstError,
    ScenarioError,
    SingularDesign,
)
from .survival import (
    Arm,
    KmCurve,
    KmRmstDifference,
    RmstEstimate,
    SurvivalSample,
    km_fit,
    km_rmst_difference,
    rmst,
)
from .pseudovalues import PseudovalueSet, pseudovalues_fast, pseudovalues_naive
from .regression import (
    ColumnRole,
    DesignMatrix,
    RegressionFit,
    WaldResult,
    design_matrix,
    fit_pseudovalue_ols,
    wald_treatment_effect,
)
from .planning import (
    CorrelationProfile,
    NoisyCovariateSpec,
    adjusted_treatment_variance,
    bias_limit_random_covariate,
    bias_limit_standardized,
    empirical_correlation_profile,
    expected_bias_random_covariate,
    predict_variance_reduction,
    required_sample_size,
    variance_limit_random_covariate,
    weighted_correlation,
)
from .simulation import (
    Link,
    ScenarioConfig,
    ScenarioResult,
    SimulatedDataset,
    TrueEffectOracle,
    generate_dataset,
    median_conditional_hazard_ratio,
    resolve_tau,
    run_scenario,
    true_effect_oracle,
    true_rmst_difference,
)
from .dataset_io import read_dataset, write_dataset

__version__ = "0.1.0"

__all__ = [
    "Arm",
    "ColumnRole",
    "ConfigError",
    "CorrelationProfile",
    "DegenerateCovariate",
    "DesignMatrix",
    "InvalidInput",
    "KmCurve",
    "KmRmstDifference",
    "Link",
    "NoisyCovariateSpec",
    "ParseError",
    "PseudovalueSet",
    "RegressionFit",
    "RestrictionTimeBeyondData",
    "RmstError",
    "RmstEstimate",
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioResult",
    "SimulatedDataset",
    "SingularDesign",
    "SurvivalSample",
    "TrueEffectOracle",
    "WaldResult",
    "adjusted_treatment_variance",
    "bias_limit_random_covariate",
    "bias_limit_standardized",
    "design_matrix",
    "empirical_correlation_profile",
    "expected_bias_random_covariate",
    "fit_pseudovalue_ols",
    "generate_dataset",
    "km_fit",
    "km_rmst_difference",
    "median_conditional_hazard_ratio",
    "predict_variance_reduction",
    "pseudovalues_fast",
    "pseudovalues_naive",
    "read_dataset",
    "required_sample_size",
    "resolve_tau",
    "rmst",
    "run_scenario",
    "true_effect_oracle",
    "true_rmst_difference",
    "wald_treatment_effect",
    "weighted_correlation",
    "write_dataset",
]
