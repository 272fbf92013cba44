"""Experiment runners: coverage, width, bias, S&A comparison, regression.

Every runner produces a list of row dicts in a single fixed CSV schema.
The first column carries the schema tag as its header and the row kind
(``trial`` or ``summary``) as its value. Trials run independently on
substream [setting, trial] under the run's master seed, so reruns with
the same config are byte-identical regardless of thread count; rows are
emitted in deterministic (setting, trial, parameter, level, method)
order, with per-setting summary rows after the trial rows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..baselines import SAConfig, default_subset_count, fisher_ci, subsample_aggregate_ci
from ..bootstrap import bias_correct, efron_percentile_interval, run_parametric_bootstrap
from ..errors import EmptyInputError, InvalidConfigError, NumericalFailureError
from ..estimators import SspExpFamEstimator, SspOlsEstimator
from ..expfam import ExpFamModel, classical_mle, make_model, target_stderrs
from ..ols import generate_synthetic_regression, ols_fisher_ci
from ..privacy import Bounds
from ..rng import RandomStream
from .config import ExperimentConfig

__all__ = [
    "CSV_SCHEMA_TAG",
    "CSV_COLUMNS",
    "surrogate_bounds",
    "run_experiment",
    "run_coverage_experiment",
    "run_width_experiment",
    "run_bias_experiment",
    "run_sa_comparison",
    "run_ols_coverage",
    "write_rows",
    "rows_to_csv_text",
]

CSV_SCHEMA_TAG = "dpboot_schema_v1"
CSV_COLUMNS = (
    CSV_SCHEMA_TAG, "experiment", "model", "param", "n", "epsilon", "alpha",
    "clamp_threshold", "trial", "method", "estimate", "estimate_bc", "true_value",
    "ci_lo", "ci_hi", "covered", "failed_low", "failed_high", "width",
    "replicate_failures",
)

PB = "pb"
FISHER_PRIVATE = "fisher-private"
FISHER_NONPRIVATE = "fisher-nonprivate"
SA = "sa"


def surrogate_bounds(model: ExpFamModel, theta_true, size: int, rng: RandomStream,
                     range_multiplier: float = 1.0) -> Bounds:
    """Statistic bounds from the observed range of an independent sample.

    Draws ``size`` points from the model at theta_true, takes per-coordinate
    min/max of the sufficient statistics, and optionally widens the range
    about its midpoint by ``range_multiplier``.
    """
    size = int(size)
    if size < 2:
        raise InvalidConfigError(f"surrogate size must be at least 2, got {size}")
    data = model.sample(theta_true, size, rng)
    stats = np.asarray(model.suff_stat(data), dtype=float).reshape(-1, model.dim)
    lo = stats.min(axis=0)
    hi = stats.max(axis=0)
    if range_multiplier != 1.0:
        center = (lo + hi) / 2.0
        half = (hi - lo) / 2.0 * range_multiplier
        lo, hi = center - half, center + half
    return Bounds(lo, hi)


def _coverage_flags(true_value: float, lo: float, hi: float):
    failed_low = true_value < lo
    failed_high = true_value > hi
    return (not failed_low and not failed_high), failed_low, failed_high


def _interval_row(*, experiment, model, param, n, epsilon, level, trial, method,
                  estimate, lo, hi, true_value, replicate_failures="",
                  clamp_threshold=""):
    covered, failed_low, failed_high = _coverage_flags(true_value, lo, hi)
    return {
        CSV_SCHEMA_TAG: "trial", "experiment": experiment, "model": model,
        "param": param, "n": n, "epsilon": epsilon, "alpha": round(1.0 - level, 12),
        "clamp_threshold": clamp_threshold, "trial": trial, "method": method,
        "estimate": estimate, "estimate_bc": "", "true_value": true_value,
        "ci_lo": lo, "ci_hi": hi, "covered": covered, "failed_low": failed_low,
        "failed_high": failed_high, "width": hi - lo,
        "replicate_failures": replicate_failures,
    }


def _failed_interval_row(*, experiment, model, param, n, epsilon, level, trial,
                         method, true_value, clamp_threshold=""):
    """A trial whose interval construction failed numerically: estimate and
    interval cells stay empty; summaries skip them."""
    return {
        CSV_SCHEMA_TAG: "trial", "experiment": experiment, "model": model,
        "param": param, "n": n, "epsilon": epsilon, "alpha": round(1.0 - level, 12),
        "clamp_threshold": clamp_threshold, "trial": trial, "method": method,
        "estimate": "", "estimate_bc": "", "true_value": true_value,
        "ci_lo": "", "ci_hi": "", "covered": "", "failed_low": "",
        "failed_high": "", "width": "", "replicate_failures": "",
    }


def _mean(values):
    return float(np.mean(values)) if values else ""


def _summary_rows(trial_rows):
    """One aggregate row per (param, n, epsilon, alpha, clamp, method) group."""
    groups: dict = {}
    for row in trial_rows:
        key = (row["param"], row["n"], row["epsilon"], row["alpha"],
               row["clamp_threshold"], row["method"])
        groups.setdefault(key, []).append(row)
    out = []
    for key, rows in groups.items():
        param, n, epsilon, alpha, clamp_threshold, method = key
        first = rows[0]
        covered = [r["covered"] for r in rows if r["covered"] != ""]
        estimates = [r["estimate"] for r in rows if r["estimate"] != ""]
        bc = [r["estimate_bc"] for r in rows if r["estimate_bc"] != ""]
        widths = [r["width"] for r in rows if r["width"] != ""]
        failures = [r["replicate_failures"] for r in rows if r["replicate_failures"] != ""]
        out.append({
            CSV_SCHEMA_TAG: "summary", "experiment": first["experiment"],
            "model": first["model"], "param": param, "n": n, "epsilon": epsilon,
            "alpha": alpha, "clamp_threshold": clamp_threshold, "trial": "",
            "method": method, "estimate": _mean(estimates), "estimate_bc": _mean(bc),
            "true_value": first["true_value"],
            "ci_lo": "", "ci_hi": "",
            "covered": _mean([float(c) for c in covered]),
            "failed_low": sum(int(r["failed_low"]) for r in rows if r["failed_low"] != ""),
            "failed_high": sum(int(r["failed_high"]) for r in rows if r["failed_high"] != ""),
            "width": _mean(widths),
            "replicate_failures": sum(int(f) for f in failures) if failures else "",
        })
    return out


def _run_trials(worker, trials: int, threads: int):
    """Evaluate worker(0..trials-1); results keep trial order whatever the
    completion order."""
    if threads <= 1:
        return [worker(t) for t in range(trials)]
    results = [None] * trials
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(worker, t): t for t in range(trials)}
        for future in futures:
            results[futures[future]] = future.result()
    return results


def _stat_bounds_for(cfg: ExperimentConfig, model: ExpFamModel, theta_true,
                     master: RandomStream) -> Bounds:
    if cfg.bounds_mode == "explicit":
        bounds = Bounds.from_pairs(cfg.explicit_bounds)
        if bounds.dim != model.dim:
            raise InvalidConfigError(
                f"model {model.name!r} needs {model.dim} bound pairs, got {bounds.dim}")
        return bounds
    # One surrogate draw per run: the bounds stand for the modeler's domain
    # knowledge, not per-trial information.
    return surrogate_bounds(model, theta_true, cfg.surrogate_size,
                            master.substream(0, 0), cfg.range_multiplier)


def _expfam_interval_rows(cfg: ExperimentConfig, experiment: str):
    model = make_model(cfg.model, cfg.known)
    theta_true = model.to_natural(cfg.params)
    tau_true = model.target(theta_true)
    master = RandomStream(cfg.master_seed)
    bounds = _stat_bounds_for(cfg, model, theta_true, master)
    trials_root = master.substream(1)

    rows = []
    setting_index = 0
    for n in cfg.n_grid:
        for epsilon in cfg.epsilon_grid:
            estimator = SspExpFamEstimator(model=model, stat_bounds=bounds,
                                           epsilon=epsilon)
            si = setting_index

            def worker(t, n=n, epsilon=epsilon, estimator=estimator, si=si):
                stream = trials_root.substream(si, t)
                data = model.sample(theta_true, n, stream.substream(0))
                trial_rows = []
                try:
                    result = run_parametric_bootstrap(
                        estimator, data, cfg.replicates, stream.substream(1))
                    theta_np = classical_mle(model, data)
                    tau_np = model.target(theta_np)
                    sigma_np = target_stderrs(model, theta_np, n)
                except (NumericalFailureError, EmptyInputError):
                    for j, pname in enumerate(model.target_names):
                        for level in cfg.levels:
                            for method in (PB, FISHER_PRIVATE, FISHER_NONPRIVATE):
                                trial_rows.append(_failed_interval_row(
                                    experiment=experiment, model=model.name,
                                    param=pname, n=n, epsilon=epsilon, level=level,
                                    trial=t, method=method,
                                    true_value=float(tau_true[j])))
                    return trial_rows
                fit = result.fit
                for j, pname in enumerate(model.target_names):
                    for level in cfg.levels:
                        alpha = 1.0 - level
                        shared = dict(experiment=experiment, model=model.name,
                                      param=pname, n=n, epsilon=epsilon,
                                      level=level, trial=t,
                                      true_value=float(tau_true[j]))
                        lo, hi = efron_percentile_interval(result, alpha, j)
                        trial_rows.append(_interval_row(
                            method=PB, estimate=float(fit.tau[j]), lo=lo, hi=hi,
                            replicate_failures=result.failures, **shared))
                        lo, hi = fisher_ci(fit.tau[j], fit.sigma[j], alpha)
                        trial_rows.append(_interval_row(
                            method=FISHER_PRIVATE, estimate=float(fit.tau[j]),
                            lo=lo, hi=hi, **shared))
                        lo, hi = fisher_ci(tau_np[j], sigma_np[j], alpha)
                        trial_rows.append(_interval_row(
                            method=FISHER_NONPRIVATE, estimate=float(tau_np[j]),
                            lo=lo, hi=hi, **shared))
                return trial_rows

            per_trial = _run_trials(worker, cfg.trials, cfg.threads)
            setting_rows = [row for trial_rows in per_trial for row in trial_rows]
            rows.extend(setting_rows)
            rows.extend(_summary_rows(setting_rows))
            setting_index += 1
    return rows


def run_coverage_experiment(cfg: ExperimentConfig):
    """Coverage of bootstrap and plug-in intervals across the (n, epsilon) grid."""
    return _expfam_interval_rows(cfg, "coverage")


def run_width_experiment(cfg: ExperimentConfig):
    """Same trials as coverage; the summary width columns are the payload."""
    return _expfam_interval_rows(cfg, "width")


def run_bias_experiment(cfg: ExperimentConfig):
    """Raw vs bias-corrected private estimates under right-tail clamping."""
    model = make_model(cfg.model, cfg.known)
    if model.dim != 1 or model.data_dim != 1:
        raise InvalidConfigError("bias experiments support scalar-statistic models only")
    theta_true = model.to_natural(cfg.params)
    tau_true = float(model.target(theta_true)[0])
    pname = model.target_names[0]
    master = RandomStream(cfg.master_seed)
    trials_root = master.substream(1)

    rows = []
    setting_index = 0
    for n in cfg.n_grid:
        for epsilon in cfg.epsilon_grid:
            for threshold in cfg.clamp_thresholds:
                if threshold <= cfg.clamp_lower:
                    raise InvalidConfigError(
                        f"clamp threshold {threshold} must exceed clamp_lower {cfg.clamp_lower}")
                bounds = Bounds([cfg.clamp_lower], [threshold])
                estimator = SspExpFamEstimator(model=model, stat_bounds=bounds,
                                               epsilon=epsilon)
                si = setting_index

                def worker(t, n=n, epsilon=epsilon, threshold=threshold,
                           estimator=estimator, si=si):
                    stream = trials_root.substream(si, t)
                    data = model.sample(theta_true, n, stream.substream(0))
                    result = run_parametric_bootstrap(
                        estimator, data, cfg.replicates, stream.substream(1))
                    _, corrected = bias_correct(result)
                    return [{
                        CSV_SCHEMA_TAG: "trial", "experiment": "bias",
                        "model": model.name, "param": pname, "n": n,
                        "epsilon": epsilon, "alpha": "",
                        "clamp_threshold": threshold, "trial": t, "method": PB,
                        "estimate": float(result.tau_hat[0]),
                        "estimate_bc": float(corrected), "true_value": tau_true,
                        "ci_lo": "", "ci_hi": "", "covered": "",
                        "failed_low": "", "failed_high": "", "width": "",
                        "replicate_failures": result.failures,
                    }]

                per_trial = _run_trials(worker, cfg.trials, cfg.threads)
                setting_rows = [row for trial_rows in per_trial for row in trial_rows]
                rows.extend(setting_rows)
                rows.extend(_summary_rows(setting_rows))
                setting_index += 1
    return rows


def run_sa_comparison(cfg: ExperimentConfig):
    """Bootstrap intervals vs subsample-and-aggregate for a Gaussian mean."""
    model = make_model(cfg.model, cfg.known)
    if model.name != "gaussian":
        raise InvalidConfigError("sa-compare runs on the known-variance gaussian model")
    theta_true = model.to_natural(cfg.params)
    tau_true = float(model.target(theta_true)[0])
    level = cfg.levels[0]
    alpha = 1.0 - level
    master = RandomStream(cfg.master_seed)
    bounds = _stat_bounds_for(cfg, model, theta_true, master)
    x_min, x_max = float(bounds.lower[0]), float(bounds.upper[0])
    trials_root = master.substream(1)

    rows = []
    setting_index = 0
    for n in cfg.n_grid:
        for epsilon in cfg.epsilon_grid:
            estimator = SspExpFamEstimator(model=model, stat_bounds=bounds,
                                           epsilon=epsilon)
            m_subsets = cfg.sa.m_subsets or default_subset_count(n)
            sa_cfg = SAConfig(m_subsets=m_subsets, x_min=x_min, x_max=x_max,
                              l_min=cfg.sa.l_min, l_max=cfg.sa.l_max,
                              var_max=cfg.sa.var_max, epsilon=epsilon,
                              alpha=alpha, b_inner=cfg.sa.b_inner)
            si = setting_index

            def worker(t, n=n, epsilon=epsilon, estimator=estimator,
                       sa_cfg=sa_cfg, si=si):
                stream = trials_root.substream(si, t)
                data = model.sample(theta_true, n, stream.substream(0))
                result = run_parametric_bootstrap(
                    estimator, data, cfg.replicates, stream.substream(1))
                shared = dict(experiment="sa-compare", model=model.name,
                              param=model.target_names[0], n=n, epsilon=epsilon,
                              level=level, trial=t, true_value=tau_true)
                lo, hi = efron_percentile_interval(result, alpha)
                pb_row = _interval_row(method=PB, estimate=float(result.tau_hat[0]),
                                       lo=lo, hi=hi,
                                       replicate_failures=result.failures, **shared)
                theta_dp, (lo, hi) = subsample_aggregate_ci(
                    data, np.mean, sa_cfg, stream.substream(2))
                sa_row = _interval_row(method=SA, estimate=theta_dp, lo=lo, hi=hi,
                                       **shared)
                return [pb_row, sa_row]

            per_trial = _run_trials(worker, cfg.trials, cfg.threads)
            setting_rows = [row for trial_rows in per_trial for row in trial_rows]
            rows.extend(setting_rows)
            rows.extend(_summary_rows(setting_rows))
            setting_index += 1
    return rows


def run_ols_coverage(cfg: ExperimentConfig):
    """Per-coordinate interval coverage for private linear regression."""
    o = cfg.ols
    x_bounds = Bounds.from_pairs([(-o.x_half_width, o.x_half_width)] * o.p)
    y_bounds = Bounds([-o.y_bound], [o.y_bound])
    beta_true = np.asarray(o.beta, dtype=float)
    master = RandomStream(cfg.master_seed)
    trials_root = master.substream(1)
    if o.budget_split is None:
        fractions = np.full(3, 1.0 / 3.0)
    else:
        fractions = np.asarray(o.budget_split, dtype=float)
        fractions = fractions / fractions.sum()

    rows = []
    setting_index = 0
    for n in cfg.n_grid:
        for epsilon in cfg.epsilon_grid:
            budget = tuple(epsilon * f for f in fractions) if math.isfinite(epsilon) \
                else (math.inf, math.inf, math.inf)
            estimator = SspOlsEstimator(x_bounds=x_bounds, y_bounds=y_bounds,
                                        residual_bound=o.residual_bound,
                                        budget=budget)
            si = setting_index

            def worker(t, n=n, epsilon=epsilon, estimator=estimator, si=si):
                stream = trials_root.substream(si, t)
                data, _ = generate_synthetic_regression(
                    n, o.p, beta_true, stream.substream(0),
                    x_half_width=o.x_half_width,
                    noise_half_width=o.noise_half_width, y_limit=o.y_bound)
                trial_rows = []

                def failed_rows(methods):
                    for j in range(o.p):
                        for level in cfg.levels:
                            for method in methods:
                                trial_rows.append(_failed_interval_row(
                                    experiment="ols-coverage", model="ols",
                                    param=f"beta{j}", n=n, epsilon=epsilon,
                                    level=level, trial=t, method=method,
                                    true_value=float(beta_true[j])))

                try:
                    result = run_parametric_bootstrap(
                        estimator, data, cfg.replicates, stream.substream(1))
                except (NumericalFailureError, EmptyInputError):
                    failed_rows((PB, FISHER_PRIVATE, FISHER_NONPRIVATE))
                    return trial_rows
                release = result.fit.context
                gram = data.X.T @ data.X
                beta_np = np.linalg.solve(gram, data.X.T @ data.y)
                resid = data.y - data.X @ beta_np
                sigma2_np = float(resid @ resid) / (data.n - data.p)
                q_inv_np = np.linalg.inv(gram / data.n)
                for j in range(o.p):
                    se_np = math.sqrt(sigma2_np * q_inv_np[j, j] / data.n)
                    for level in cfg.levels:
                        alpha = 1.0 - level
                        shared = dict(experiment="ols-coverage", model="ols",
                                      param=f"beta{j}", n=n, epsilon=epsilon,
                                      level=level, trial=t,
                                      true_value=float(beta_true[j]))
                        lo, hi = efron_percentile_interval(result, alpha, j)
                        trial_rows.append(_interval_row(
                            method=PB, estimate=float(result.tau_hat[j]),
                            lo=lo, hi=hi, replicate_failures=result.failures,
                            **shared))
                        try:
                            lo, hi = ols_fisher_ci(release, j, alpha)
                        except NumericalFailureError:
                            trial_rows.append(_failed_interval_row(
                                method=FISHER_PRIVATE, **shared))
                        else:
                            trial_rows.append(_interval_row(
                                method=FISHER_PRIVATE,
                                estimate=float(release.beta_hat[j]),
                                lo=lo, hi=hi, **shared))
                        lo, hi = fisher_ci(beta_np[j], se_np, alpha)
                        trial_rows.append(_interval_row(
                            method=FISHER_NONPRIVATE, estimate=float(beta_np[j]),
                            lo=lo, hi=hi, **shared))
                return trial_rows

            per_trial = _run_trials(worker, cfg.trials, cfg.threads)
            setting_rows = [row for trial_rows in per_trial for row in trial_rows]
            rows.extend(setting_rows)
            rows.extend(_summary_rows(setting_rows))
            setting_index += 1
    return rows


_RUNNERS = {
    "coverage": run_coverage_experiment,
    "width": run_width_experiment,
    "bias": run_bias_experiment,
    "sa-compare": run_sa_comparison,
    "ols-coverage": run_ols_coverage,
}


def run_experiment(cfg: ExperimentConfig):
    """Dispatch a config to its runner and return the result rows."""
    return _RUNNERS[cfg.kind](cfg)


def _format_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def rows_to_csv_text(rows) -> str:
    """Render rows as the canonical CSV text (header plus one line per row)."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        rendered = [_format_cell(row.get(col, "")) for col in CSV_COLUMNS]
        if any("," in cell or '"' in cell or "\n" in cell for cell in rendered):
            raise ValueError("cell values must not need CSV quoting")
        lines.append(",".join(rendered))
    return "\n".join(lines) + "\n"


def write_rows(rows, path) -> None:
    """Write rows as UTF-8 CSV; byte-identical for identical row content."""
    text = rows_to_csv_text(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
