"""Monte Carlo experiment harness: configs, runners, CSV output."""

from .config import (
    DEFAULT_LEVELS,
    EXPERIMENT_KINDS,
    ExperimentConfig,
    OlsSettings,
    SaSettings,
    load_config,
)
from .runners import (
    CSV_COLUMNS,
    CSV_SCHEMA_TAG,
    rows_to_csv_text,
    run_bias_experiment,
    run_coverage_experiment,
    run_experiment,
    run_ols_coverage,
    run_sa_comparison,
    run_width_experiment,
    surrogate_bounds,
    write_rows,
)

__all__ = [
    "DEFAULT_LEVELS",
    "EXPERIMENT_KINDS",
    "ExperimentConfig",
    "OlsSettings",
    "SaSettings",
    "load_config",
    "CSV_COLUMNS",
    "CSV_SCHEMA_TAG",
    "rows_to_csv_text",
    "run_bias_experiment",
    "run_coverage_experiment",
    "run_experiment",
    "run_ols_coverage",
    "run_sa_comparison",
    "run_width_experiment",
    "surrogate_bounds",
    "write_rows",
]
