"""Command line interface.

Experiment subcommands read a JSON config, write a results CSV, and can
render figures next to it:

    dpboot coverage   --config cfg.json --out results.csv [--figdir figs/]
    dpboot width      --config cfg.json --out results.csv
    dpboot bias       --config cfg.json --out results.csv
    dpboot sa-compare --config cfg.json --out results.csv
    dpboot ols        --config cfg.json --out results.csv
    dpboot estimate   --data data.csv --config est.json [--out est.csv]
    dpboot plot       --csv results.csv --outdir figs/

``--seed`` and ``--threads`` override the config file. Reruns with the
same config and seed produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .baselines import fisher_ci
from .bootstrap import (
    bias_correct,
    efron_percentile_interval,
    pivotal_interval,
    run_parametric_bootstrap,
    studentized_pivotal_interval,
)
from .errors import DpBootError, InvalidConfigError, UnsupportedEstimatorError
from .estimators import SspExpFamEstimator, SspOlsEstimator
from .expfam import make_model
from .harness import load_config, run_experiment, write_rows
from .ols import RegressionData, ols_fisher_ci
from .privacy import Bounds
from .rng import RandomStream

_KIND_BY_COMMAND = {
    "coverage": "coverage",
    "width": "width",
    "bias": "bias",
    "sa-compare": "sa-compare",
    "ols": "ols-coverage",
}

ESTIMATE_COLUMNS = ("param", "method", "estimate", "ci_lo", "ci_hi", "alpha",
                    "replicates", "replicate_failures")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpboot",
        description="Differentially private estimation with bootstrap confidence intervals.")
    sub = parser.add_subparsers(dest="command", required=True)

    for command in _KIND_BY_COMMAND:
        cmd = sub.add_parser(command, help=f"run the {command} experiment")
        cmd.add_argument("--config", required=True, help="JSON experiment config")
        cmd.add_argument("--out", required=True, help="output CSV path")
        cmd.add_argument("--seed", type=int, default=None, help="override master seed")
        cmd.add_argument("--threads", type=int, default=None, help="override thread count")
        cmd.add_argument("--figdir", default=None,
                         help="also render figures into this directory")

    est = sub.add_parser("estimate", help="private estimate and intervals for one dataset")
    est.add_argument("--data", required=True, help="numeric CSV (no header)")
    est.add_argument("--config", required=True, help="JSON estimation config")
    est.add_argument("--out", default=None, help="optional output CSV path")
    est.add_argument("--seed", type=int, default=None, help="override seed")

    plot = sub.add_parser("plot", help="render figures from a results CSV")
    plot.add_argument("--csv", required=True, help="results CSV produced by an experiment")
    plot.add_argument("--outdir", required=True, help="directory for the figures")
    return parser


def _run_experiment_command(args) -> int:
    cfg = load_config(args.config, kind=_KIND_BY_COMMAND[args.command],
                      seed=args.seed, threads=args.threads)
    rows = run_experiment(cfg)
    write_rows(rows, args.out)
    n_trial = sum(1 for r in rows if r["dpboot_schema_v1"] == "trial")
    n_summary = len(rows) - n_trial
    print(f"wrote {args.out}: {n_trial} trial rows, {n_summary} summary rows")
    if args.figdir is not None:
        from .plots import render_figures
        written = render_figures(args.out, args.figdir)
        for path in written:
            print(f"wrote {path}")
    return 0


def _load_matrix(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(data)):
        raise InvalidConfigError(f"data file {path} contains non-finite values")
    return data


def _epsilon_value(raw):
    if isinstance(raw, str) and raw.lower() in ("inf", "infinity"):
        return math.inf
    value = float(raw)
    if math.isnan(value) or value <= 0:
        raise InvalidConfigError(f"epsilon must be positive, got {raw!r}")
    return value


def _estimate_rows(args) -> list[dict]:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise InvalidConfigError("estimation config must be a JSON object")
    seed = int(raw.get("seed", 0)) if args.seed is None else args.seed
    alpha = float(raw.get("alpha", 0.05))
    replicates = int(raw.get("replicates", 1000))
    epsilon = _epsilon_value(raw.get("epsilon", 1.0))
    rng = RandomStream(seed)
    matrix = _load_matrix(args.data)

    model_name = str(raw.get("model", ""))
    if model_name == "ols":
        if "x_bounds" not in raw or "y_bounds" not in raw:
            raise InvalidConfigError("ols estimation needs x_bounds and y_bounds")
        x_bounds = Bounds.from_pairs(raw["x_bounds"])
        y_lo, y_hi = raw["y_bounds"]
        split = np.asarray(raw.get("budget_split", [1.0, 1.0, 1.0]), dtype=float)
        split = split / split.sum()
        budget = tuple(epsilon * f for f in split) if math.isfinite(epsilon) \
            else (math.inf, math.inf, math.inf)
        estimator = SspOlsEstimator(
            x_bounds=x_bounds, y_bounds=Bounds([float(y_lo)], [float(y_hi)]),
            residual_bound=float(raw.get("residual_bound", (y_hi - y_lo) / 10.0)),
            budget=budget)
        data = RegressionData(matrix[:, :-1], matrix[:, -1])
        names = tuple(f"beta{j}" for j in range(data.p))
    else:
        model = make_model(model_name, raw.get("known"))
        if "bounds" not in raw:
            raise InvalidConfigError("estimation config needs statistic 'bounds'")
        estimator = SspExpFamEstimator(
            model=model, stat_bounds=Bounds.from_pairs(raw["bounds"]),
            epsilon=epsilon)
        data = matrix[:, 0] if model.data_dim == 1 else matrix
        names = model.target_names

    result = run_parametric_bootstrap(estimator, data, replicates, rng)
    bias, corrected = bias_correct(result)
    corrected = np.atleast_1d(corrected)

    rows = []

    def add(param, method, estimate, lo="", hi=""):
        rows.append({"param": param, "method": method, "estimate": estimate,
                     "ci_lo": lo, "ci_hi": hi, "alpha": alpha,
                     "replicates": replicates,
                     "replicate_failures": result.failures})

    for j, name in enumerate(names):
        add(name, "point", float(result.tau_hat[j]))
        add(name, "bias-corrected", float(corrected[j]))
        lo, hi = efron_percentile_interval(result, alpha, j)
        add(name, "efron", float(result.tau_hat[j]), lo, hi)
        lo, hi = pivotal_interval(result, alpha, j)
        add(name, "pivotal", float(result.tau_hat[j]), lo, hi)
        try:
            lo, hi = studentized_pivotal_interval(result, alpha, j)
            add(name, "studentized", float(result.tau_hat[j]), lo, hi)
        except UnsupportedEstimatorError:
            pass
        if model_name == "ols":
            lo, hi = ols_fisher_ci(result.fit.context, j, alpha)
        else:
            lo, hi = fisher_ci(result.tau_hat[j], result.sigma_hat[j], alpha)
        add(name, "fisher", float(result.tau_hat[j]), lo, hi)
    return rows


def _run_estimate_command(args) -> int:
    rows = _estimate_rows(args)
    for row in rows:
        ci = ""
        if row["ci_lo"] != "":
            ci = f"  [{row['ci_lo']:.6g}, {row['ci_hi']:.6g}]"
        print(f"{row['param']:>10}  {row['method']:<14} {row['estimate']:.6g}{ci}")
    if args.out is not None:
        lines = [",".join(ESTIMATE_COLUMNS)]
        for row in rows:
            lines.append(",".join(
                "" if row[c] == "" else (repr(float(row[c]))
                                         if isinstance(row[c], float) else str(row[c]))
                for c in ESTIMATE_COLUMNS))
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def _run_plot_command(args) -> int:
    from .plots import render_figures
    written = render_figures(args.csv, args.outdir)
    if not written:
        print("no summary rows found; nothing to plot", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in _KIND_BY_COMMAND:
            return _run_experiment_command(args)
        if args.command == "estimate":
            return _run_estimate_command(args)
        return _run_plot_command(args)
    except DpBootError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
