"""Differentially private parametric estimation with bootstrap confidence intervals."""

from .bootstrap import (
    BootstrapResult,
    FitResult,
    bias_correct,
    efron_percentile_interval,
    pivotal_interval,
    run_parametric_bootstrap,
    studentized_pivotal_interval,
)
from .baselines import SAConfig, fisher_ci, subsample_aggregate_ci
from .errors import (
    DpBootError,
    EmptyInputError,
    InvalidBoundsError,
    InvalidBudgetError,
    InvalidConfigError,
    InvalidParameterError,
    NumericalFailureError,
    ReplicateFailureError,
    SingularReleaseError,
    UnsupportedEstimatorError,
)
from .estimators import SspExpFamEstimator, SspOlsEstimator
from .expfam import (
    ExpFamModel,
    classical_mle,
    fisher_information,
    make_model,
    newton_mle,
    plugin_stderr,
    ssp_mle,
    ssp_release,
    sufficient_statistic_total,
    target_stderr,
    target_stderrs,
)
from .ols import (
    RegressionData,
    RegressionRelease,
    generate_synthetic_regression,
    hybrid_bootstrap_replicate,
    ols_fisher_ci,
    ols_point_estimate,
    replicate_from_noise,
    ssp_ols_release,
)
from .privacy import (
    Bounds,
    NoisyVector,
    PrivacyBudget,
    additive_sensitivity,
    clamp_data,
    drop_out_of_bounds,
    laplace_mechanism,
)
from .rng import (
    RandomStream,
    empirical_quantile,
    sample_bernoulli,
    sample_gamma,
    sample_gaussian,
    sample_laplace,
    sample_poisson,
    sample_uniform,
    std_normal_quantile,
)

__version__ = "0.1.0"
