"""Experiment configuration: JSON schema, defaults, validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InvalidConfigError

__all__ = ["ExperimentConfig", "OlsSettings", "SaSettings", "load_config",
           "EXPERIMENT_KINDS", "DEFAULT_LEVELS"]

EXPERIMENT_KINDS = ("coverage", "width", "bias", "sa-compare", "ols-coverage")

# Nominal coverage grid used when a config does not pin its own.
DEFAULT_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)


def _positive_int(value, name) -> int:
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be an integer, got {value!r}") from None
    if out < 1:
        raise InvalidConfigError(f"{name} must be at least 1, got {out}")
    return out


def _epsilon(value, name) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be a number or 'inf', got {value!r}") from None
    if math.isnan(out) or out <= 0:
        raise InvalidConfigError(f"{name} must be positive, got {out}")
    return out


@dataclass(frozen=True)
class OlsSettings:
    """Regression-experiment knobs: design size, truth, bounds, budget split."""

    p: int = 2
    beta: tuple[float, ...] = (2.0, -1.0)
    x_half_width: float = 5.0
    noise_half_width: float = 10.0
    y_bound: float = 150.0
    residual_bound: float = 20.0
    budget_split: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.p < 1:
            raise InvalidConfigError(f"p must be at least 1, got {self.p}")
        if len(self.beta) != self.p:
            raise InvalidConfigError(
                f"beta has {len(self.beta)} entries but p = {self.p}")
        for name in ("x_half_width", "noise_half_width", "y_bound", "residual_bound"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be positive")
        if self.budget_split is not None and len(self.budget_split) != 3:
            raise InvalidConfigError("budget_split needs exactly three entries")

    @classmethod
    def from_dict(cls, raw: dict) -> "OlsSettings":
        raw = dict(raw)
        beta = tuple(float(b) for b in raw.pop("beta", (2.0, -1.0)))
        split = raw.pop("budget_split", None)
        if split is not None:
            split = tuple(_epsilon(e, "budget_split entry") for e in split)
        return cls(p=int(raw.pop("p", len(beta))), beta=beta, budget_split=split,
                   **{k: float(v) for k, v in raw.items()})


@dataclass(frozen=True)
class SaSettings:
    """Subsample-and-aggregate knobs; m_subsets = None means ceil(n ** 0.4)."""

    m_subsets: int | None = None
    l_min: float = -10.0
    l_max: float = 10.0
    var_max: float = 50.0
    b_inner: int = 100

    def __post_init__(self):
        if self.m_subsets is not None and self.m_subsets < 2:
            raise InvalidConfigError("m_subsets must be at least 2")
        if not self.l_min < self.l_max:
            raise InvalidConfigError("need l_min < l_max")
        if self.var_max <= 0:
            raise InvalidConfigError("var_max must be positive")
        if self.b_inner < 2:
            raise InvalidConfigError("b_inner must be at least 2")

    @classmethod
    def from_dict(cls, raw: dict) -> "SaSettings":
        raw = dict(raw)
        m = raw.pop("m_subsets", None)
        return cls(m_subsets=None if m is None else int(m),
                   l_min=float(raw.pop("l_min", -10.0)),
                   l_max=float(raw.pop("l_max", 10.0)),
                   var_max=float(raw.pop("var_max", 50.0)),
                   b_inner=int(raw.pop("b_inner", 100)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    kind: str
    model: str = "poisson"
    params: tuple[float, ...] = (2.3,)
    known: dict = field(default_factory=dict)
    n_grid: tuple[int, ...] = (100,)
    epsilon_grid: tuple[float, ...] = (0.5,)
    levels: tuple[float, ...] = DEFAULT_LEVELS
    trials: int = 1000
    replicates: int = 200
    bounds_mode: str = "surrogate"
    explicit_bounds: tuple[tuple[float, float], ...] | None = None
    surrogate_size: int = 1000
    range_multiplier: float = 1.0
    master_seed: int = 0
    threads: int = 1
    clamp_lower: float = 0.0
    clamp_thresholds: tuple[float, ...] = ()
    sa: SaSettings = field(default_factory=SaSettings)
    ols: OlsSettings = field(default_factory=OlsSettings)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise InvalidConfigError(
                f"unknown experiment kind {self.kind!r}; choose from {EXPERIMENT_KINDS}")
        if not self.n_grid or any(n < 2 for n in self.n_grid):
            raise InvalidConfigError("n_grid must be non-empty with entries >= 2")
        if not self.epsilon_grid:
            raise InvalidConfigError("epsilon_grid must be non-empty")
        if not self.levels or any(not 0.0 < lv < 1.0 for lv in self.levels):
            raise InvalidConfigError("levels must be non-empty and inside (0, 1)")
        if self.trials < 1:
            raise InvalidConfigError("trials must be at least 1")
        if self.replicates < 1:
            raise InvalidConfigError("replicates must be at least 1")
        if self.bounds_mode not in ("surrogate", "explicit"):
            raise InvalidConfigError("bounds_mode must be 'surrogate' or 'explicit'")
        if self.bounds_mode == "explicit" and not self.explicit_bounds:
            raise InvalidConfigError("explicit bounds_mode needs explicit_bounds")
        if self.surrogate_size < 2:
            raise InvalidConfigError("surrogate_size must be at least 2")
        if self.range_multiplier <= 0:
            raise InvalidConfigError("range_multiplier must be positive")
        if self.threads < 1:
            raise InvalidConfigError("threads must be at least 1")
        if self.kind == "bias" and not self.clamp_thresholds:
            raise InvalidConfigError("bias experiments need clamp_thresholds")
        if self.kind == "sa-compare" and len(self.levels) != 1:
            raise InvalidConfigError(
                "sa-compare runs a single nominal level; set levels to one value")

    @classmethod
    def from_dict(cls, raw: dict, kind: str | None = None) -> "ExperimentConfig":
        raw = dict(raw)
        file_kind = raw.pop("experiment", None)
        kind = kind or file_kind
        if kind is None:
            raise InvalidConfigError("config needs an 'experiment' kind")
        if file_kind is not None and kind != file_kind:
            raise InvalidConfigError(
                f"config says experiment {file_kind!r} but {kind!r} was requested")

        fields: dict = {"kind": kind}
        if "model" in raw:
            fields["model"] = str(raw.pop("model"))
        if "params" in raw:
            fields["params"] = tuple(float(v) for v in raw.pop("params"))
        if "known" in raw:
            fields["known"] = dict(raw.pop("known"))
        if "n_grid" in raw:
            fields["n_grid"] = tuple(_positive_int(n, "n_grid entry") for n in raw.pop("n_grid"))
        if "epsilon_grid" in raw:
            fields["epsilon_grid"] = tuple(
                _epsilon(e, "epsilon_grid entry") for e in raw.pop("epsilon_grid"))
        if "levels" in raw:
            fields["levels"] = tuple(float(v) for v in raw.pop("levels"))
        for name in ("trials", "replicates", "surrogate_size", "master_seed", "threads"):
            if name in raw:
                fields[name] = int(raw.pop(name))
        if "bounds_mode" in raw:
            fields["bounds_mode"] = str(raw.pop("bounds_mode"))
        if "explicit_bounds" in raw:
            bounds = raw.pop("explicit_bounds")
            fields["explicit_bounds"] = None if bounds is None else tuple(
                (float(lo), float(hi)) for lo, hi in bounds)
        if "range_multiplier" in raw:
            fields["range_multiplier"] = float(raw.pop("range_multiplier"))
        if "clamp_lower" in raw:
            fields["clamp_lower"] = float(raw.pop("clamp_lower"))
        if "clamp_thresholds" in raw:
            fields["clamp_thresholds"] = tuple(float(v) for v in raw.pop("clamp_thresholds"))
        if "sa" in raw:
            fields["sa"] = SaSettings.from_dict(raw.pop("sa"))
        if "ols" in raw:
            fields["ols"] = OlsSettings.from_dict(raw.pop("ols"))
        if raw:
            raise InvalidConfigError(f"unknown config keys: {sorted(raw)}")
        return cls(**fields)


def load_config(path, kind: str | None = None, *, seed: int | None = None,
                threads: int | None = None) -> ExperimentConfig:
    """Read a JSON config file; CLI overrides replace the file's values."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfigError("config file must hold a JSON object")
    if seed is not None:
        raw["master_seed"] = int(seed)
    if threads is not None:
        raw["threads"] = int(threads)
    return ExperimentConfig.from_dict(raw, kind=kind)
