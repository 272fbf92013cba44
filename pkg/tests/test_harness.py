import csv
import math

import numpy as np
import pytest

from dpboot.errors import InvalidConfigError
from dpboot.expfam import make_model
from dpboot.harness import (
    CSV_COLUMNS,
    CSV_SCHEMA_TAG,
    DEFAULT_LEVELS,
    ExperimentConfig,
    load_config,
    rows_to_csv_text,
    run_experiment,
    surrogate_bounds,
    write_rows,
)
from dpboot.rng import RandomStream


def config(**overrides):
    base = {
        "experiment": "coverage", "model": "poisson", "params": [2.3],
        "n_grid": [60], "epsilon_grid": [0.5], "levels": [0.9],
        "trials": 8, "replicates": 25, "master_seed": 11,
    }
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


def trial_rows(rows):
    return [r for r in rows if r[CSV_SCHEMA_TAG] == "trial"]


def summary_rows(rows):
    return [r for r in rows if r[CSV_SCHEMA_TAG] == "summary"]


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({"experiment": "coverage"})
        assert cfg.levels == DEFAULT_LEVELS
        assert cfg.trials == 1000 and cfg.replicates == 200
        assert cfg.surrogate_size == 1000

    def test_unknown_kind(self):
        with pytest.raises(InvalidConfigError):
            ExperimentConfig.from_dict({"experiment": "nope"})

    def test_unknown_keys_rejected(self):
        with pytest.raises(InvalidConfigError):
            ExperimentConfig.from_dict({"experiment": "coverage", "bogus": 1})

    def test_bias_needs_thresholds(self):
        with pytest.raises(InvalidConfigError):
            ExperimentConfig.from_dict({"experiment": "bias"})

    def test_sa_compare_needs_single_level(self):
        with pytest.raises(InvalidConfigError):
            ExperimentConfig.from_dict(
                {"experiment": "sa-compare", "model": "gaussian",
                 "levels": [0.9, 0.95]})

    def test_explicit_mode_needs_bounds(self):
        with pytest.raises(InvalidConfigError):
            ExperimentConfig.from_dict(
                {"experiment": "coverage", "bounds_mode": "explicit"})

    def test_epsilon_inf_string(self):
        cfg = ExperimentConfig.from_dict(
            {"experiment": "coverage", "epsilon_grid": ["inf"]})
        assert cfg.epsilon_grid == (math.inf,)

    def test_kind_mismatch_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"experiment": "coverage"}', encoding="utf-8")
        with pytest.raises(InvalidConfigError):
            load_config(path, kind="bias")

    def test_cli_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"experiment": "coverage", "master_seed": 1}', encoding="utf-8")
        cfg = load_config(path, seed=99, threads=3)
        assert cfg.master_seed == 99 and cfg.threads == 3


class TestSurrogateBounds:
    def test_constant_statistic_zero_width(self):
        model = make_model("bernoulli")
        bounds = surrogate_bounds(model, model.to_natural([1.0 - 1e-12]), 50,
                                  RandomStream(0))
        assert bounds.widths[0] == 0.0

    def test_bernoulli_mixed_sample_unit_bounds(self):
        model = make_model("bernoulli")
        bounds = surrogate_bounds(model, model.to_natural([0.5]), 1000, RandomStream(1))
        assert (bounds.lower[0], bounds.upper[0]) == (0.0, 1.0)

    def test_range_multiplier_doubles_width(self):
        model = make_model("gaussian", {"sd": 1.0})
        theta = model.to_natural([0.0])
        plain = surrogate_bounds(model, theta, 500, RandomStream(2))
        doubled = surrogate_bounds(model, theta, 500, RandomStream(2),
                                   range_multiplier=2.0)
        assert doubled.widths[0] == pytest.approx(2.0 * plain.widths[0])
        mid_plain = (plain.lower[0] + plain.upper[0]) / 2.0
        mid_doubled = (doubled.lower[0] + doubled.upper[0]) / 2.0
        assert mid_doubled == pytest.approx(mid_plain)

    def test_statistic_coordinates_for_meanvar(self):
        model = make_model("gaussian-meanvar")
        bounds = surrogate_bounds(model, model.to_natural([0.0, 1.0]), 200,
                                  RandomStream(3))
        assert bounds.dim == 2
        assert bounds.lower[1] >= 0.0  # x^2 coordinate


class TestCoverageRunner:
    def test_row_accounting(self):
        cfg = config(levels=[0.8, 0.95])
        rows = run_experiment(cfg)
        trials = trial_rows(rows)
        # trials x levels x methods rows
        assert len(trials) == cfg.trials * 2 * 3
        for alpha in sorted({r["alpha"] for r in trials}):
            for method in ("pb", "fisher-private", "fisher-nonprivate"):
                group = [r for r in trials if r["method"] == method and r["alpha"] == alpha]
                assert len(group) == cfg.trials
                flags = [(r["covered"], r["failed_low"], r["failed_high"]) for r in group]
                assert all(sum(map(bool, f)) == 1 for f in flags)
                summary = [r for r in summary_rows(rows)
                           if r["method"] == method and r["alpha"] == alpha][0]
                assert summary["covered"] == pytest.approx(
                    np.mean([float(r["covered"]) for r in group]))
                assert summary["failed_low"] + summary["failed_high"] + \
                    round(summary["covered"] * cfg.trials) == cfg.trials

    def test_intervals_ordered(self):
        rows = trial_rows(run_experiment(config()))
        assert all(r["ci_lo"] <= r["ci_hi"] for r in rows)

    def test_noiseless_private_fisher_equals_nonprivate(self):
        # With epsilon = inf and bounds wide enough to leave the data
        # unclamped, the private pipeline collapses onto the classical one.
        cfg = config(epsilon_grid=["inf"], bounds_mode="explicit",
                     explicit_bounds=[[0.0, 1000.0]])
        rows = trial_rows(run_experiment(cfg))
        private = [r for r in rows if r["method"] == "fisher-private"]
        nonprivate = [r for r in rows if r["method"] == "fisher-nonprivate"]
        for a, b in zip(private, nonprivate):
            assert a["ci_lo"] == pytest.approx(b["ci_lo"], abs=1e-12)
            assert a["ci_hi"] == pytest.approx(b["ci_hi"], abs=1e-12)

    def test_deterministic_reruns(self):
        cfg = config()
        assert rows_to_csv_text(run_experiment(cfg)) == rows_to_csv_text(run_experiment(cfg))

    def test_threads_do_not_change_output(self):
        base = rows_to_csv_text(run_experiment(config(trials=6)))
        threaded = rows_to_csv_text(run_experiment(config(trials=6, threads=2)))
        assert base == threaded

    def test_seed_changes_output(self):
        assert rows_to_csv_text(run_experiment(config(master_seed=1))) != \
            rows_to_csv_text(run_experiment(config(master_seed=2)))

    def test_width_experiment_same_shape(self):
        rows = run_experiment(config(**{}))
        width_rows = run_experiment(ExperimentConfig.from_dict({
            "experiment": "width", "model": "poisson", "params": [2.3],
            "n_grid": [60], "epsilon_grid": [0.5], "levels": [0.9],
            "trials": 8, "replicates": 25, "master_seed": 11,
        }))
        assert len(width_rows) == len(rows)
        assert all(r["experiment"] == "width" for r in width_rows)
        # identical trial streams: same numbers, different tag
        assert [r["estimate"] for r in trial_rows(width_rows)] == \
            [r["estimate"] for r in trial_rows(rows)]


class TestBiasRunner:
    def test_rows_carry_thresholds_and_corrections(self):
        cfg = ExperimentConfig.from_dict({
            "experiment": "bias", "model": "poisson", "params": [10.0],
            "n_grid": [100], "epsilon_grid": [1.0],
            "clamp_thresholds": [12.0, 14.0], "trials": 5, "replicates": 20,
            "master_seed": 3,
        })
        rows = run_experiment(cfg)
        trials = trial_rows(rows)
        assert len(trials) == 10
        assert {r["clamp_threshold"] for r in trials} == {12.0, 14.0}
        assert all(r["estimate_bc"] != "" for r in trials)
        assert all(r["ci_lo"] == "" for r in trials)
        summaries = summary_rows(rows)
        assert len(summaries) == 2

    def test_threshold_below_lower_rejected(self):
        cfg = ExperimentConfig.from_dict({
            "experiment": "bias", "model": "poisson", "params": [10.0],
            "clamp_lower": 5.0, "clamp_thresholds": [4.0], "trials": 2,
            "replicates": 5,
        })
        with pytest.raises(InvalidConfigError):
            run_experiment(cfg)

    def test_vector_model_rejected(self):
        cfg = ExperimentConfig.from_dict({
            "experiment": "bias", "model": "gaussian-meanvar",
            "params": [0.0, 1.0], "clamp_thresholds": [3.0],
            "trials": 2, "replicates": 5,
        })
        with pytest.raises(InvalidConfigError):
            run_experiment(cfg)


class TestSaRunner:
    def make_cfg(self, **overrides):
        base = {
            "experiment": "sa-compare", "model": "gaussian", "params": [0.0],
            "known": {"sd": 1.0}, "bounds_mode": "explicit",
            "explicit_bounds": [[-20.0, 20.0]], "n_grid": [400],
            "epsilon_grid": [0.5], "levels": [0.95], "trials": 6,
            "replicates": 30, "master_seed": 5,
            "sa": {"l_min": -10.0, "l_max": 10.0, "var_max": 50.0},
        }
        base.update(overrides)
        return ExperimentConfig.from_dict(base)

    def test_two_methods_per_trial(self):
        rows = trial_rows(run_experiment(self.make_cfg()))
        assert len(rows) == 12
        assert [r["method"] for r in rows[:2]] == ["pb", "sa"]

    def test_non_gaussian_model_rejected(self):
        cfg = self.make_cfg(model="poisson", params=[2.3], known={})
        with pytest.raises(InvalidConfigError):
            run_experiment(cfg)


class TestOlsRunner:
    def test_per_coordinate_rows(self):
        cfg = ExperimentConfig.from_dict({
            "experiment": "ols-coverage", "n_grid": [500],
            "epsilon_grid": [2.0], "levels": [0.95], "trials": 4,
            "replicates": 20, "master_seed": 6,
            "ols": {"p": 2, "beta": [1.0, -0.5]},
        })
        rows = trial_rows(run_experiment(cfg))
        assert {r["param"] for r in rows} == {"beta0", "beta1"}
        pb = [r for r in rows if r["method"] == "pb"]
        assert len(pb) == 4 * 2
        assert all(r["true_value"] in (1.0, -0.5) for r in rows)


class TestCsvOutput:
    def test_write_and_read_back(self, tmp_path):
        rows = run_experiment(config(trials=3))
        path = tmp_path / "out.csv"
        write_rows(rows, path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            body = list(reader)
        assert header == list(CSV_COLUMNS)
        assert len(body) == len(rows)

    def test_float_cells_round_trip(self):
        rows = run_experiment(config(trials=2))
        text = rows_to_csv_text(rows)
        line = text.splitlines()[1].split(",")
        estimate = float(line[CSV_COLUMNS.index("estimate")])
        assert estimate == trial_rows(rows)[0]["estimate"]

    def test_infinite_epsilon_renders_as_inf(self):
        cfg = config(epsilon_grid=["inf"], bounds_mode="explicit",
                     explicit_bounds=[[0.0, 50.0]], trials=2)
        text = rows_to_csv_text(run_experiment(cfg))
        assert ",inf," in text.splitlines()[1]
