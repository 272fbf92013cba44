"""Generic parametric bootstrap engine and interval constructions.

The engine runs a private estimator once on the real data (the only data
access), then produces B replicates of the estimate. An estimator plugs
in through two methods:

    fit(data, rng)       -> FitResult
    replicate(fit, rng)  -> (tau_star, sigma_star or None)

Model-resampling estimators implement ``replicate`` by simulating a fresh
dataset of the fitted size and refitting with fresh privacy noise;
estimators with a direct replicate formula (the hybrid regression
bootstrap) skip the dataset entirely. Replicate b draws all of its
randomness from substream [b] of the engine's stream, so replicates are
reproducible and order-independent; the fit itself uses substream [0].

Interval constructions from the replicates, with xi_g denoting the 1-g
empirical quantile of the pivot samples and zeta_g the 1-g quantile of
the raw replicates:

    pivotal              [tau - xi_{a/2},        tau - xi_{1-a/2}]
    studentized pivotal  [tau - xi_{a/2} sigma,  tau - xi_{1-a/2} sigma]
    Efron's percentile   [zeta_{1-a/2},          zeta_{a/2}]

The replicate mean also estimates the bias of tau_hat, giving the
bias-corrected estimate 2 tau_hat - mean(tau_star).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidParameterError,
    NumericalFailureError,
    ReplicateFailureError,
    UnsupportedEstimatorError,
)
from .rng import RandomStream, empirical_quantile

__all__ = [
    "FitResult",
    "PrivateEstimator",
    "BootstrapResult",
    "run_parametric_bootstrap",
    "pivotal_interval",
    "studentized_pivotal_interval",
    "efron_percentile_interval",
    "bias_correct",
]


@dataclass(frozen=True)
class FitResult:
    """One private fit: full parameter vector, report estimates, standard errors.

    ``context`` is estimator-private (a regression release, for example)
    and travels to ``replicate`` untouched.
    """

    theta: np.ndarray
    tau: np.ndarray
    sigma: np.ndarray | None
    n: int
    context: Any = None

    def __post_init__(self):
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        object.__setattr__(self, "tau", np.atleast_1d(np.asarray(self.tau, dtype=float)))
        if self.sigma is not None:
            object.__setattr__(self, "sigma", np.atleast_1d(np.asarray(self.sigma, dtype=float)))


class PrivateEstimator(Protocol):
    def fit(self, data, rng: RandomStream) -> FitResult: ...

    def replicate(self, fit: FitResult, rng: RandomStream): ...


@dataclass(frozen=True)
class BootstrapResult:
    """Point estimate plus the replicate matrix (one row per surviving replicate)."""

    tau_hat: np.ndarray
    sigma_hat: np.ndarray | None
    replicates: np.ndarray
    sigma_replicates: np.ndarray | None
    B: int
    failures: int
    fit: FitResult | None = None

    def __post_init__(self):
        tau = np.atleast_1d(np.asarray(self.tau_hat, dtype=float))
        reps = np.asarray(self.replicates, dtype=float)
        if reps.ndim == 1:
            reps = reps.reshape(-1, tau.size)
        object.__setattr__(self, "tau_hat", tau)
        object.__setattr__(self, "replicates", reps)
        if self.sigma_hat is not None:
            object.__setattr__(self, "sigma_hat",
                               np.atleast_1d(np.asarray(self.sigma_hat, dtype=float)))
        if self.sigma_replicates is not None:
            sig = np.asarray(self.sigma_replicates, dtype=float)
            if sig.ndim == 1:
                sig = sig.reshape(-1, tau.size)
            object.__setattr__(self, "sigma_replicates", sig)

    @property
    def dim(self) -> int:
        return self.tau_hat.size


def run_parametric_bootstrap(estimator: PrivateEstimator, data, B: int,
                             rng: RandomStream) -> BootstrapResult:
    """One private fit on the real data, then B refits on simulated draws.

    Failures of individual replicates (singular systems, non-convergence)
    are counted and skipped; a failure of the initial fit propagates.
    """
    B = int(B)
    if B < 1:
        raise InvalidParameterError(f"B must be at least 1, got {B}")
    fit = estimator.fit(data, rng.substream(0))
    taus = []
    sigmas = []
    failures = 0
    for b in range(1, B + 1):
        try:
            tau_star, sigma_star = estimator.replicate(fit, rng.substream(b))
        except (ReplicateFailureError, NumericalFailureError):
            failures += 1
            continue
        taus.append(np.atleast_1d(np.asarray(tau_star, dtype=float)))
        sigmas.append(None if sigma_star is None
                      else np.atleast_1d(np.asarray(sigma_star, dtype=float)))
    replicates = (np.vstack(taus) if taus
                  else np.empty((0, fit.tau.size)))
    if sigmas and all(s is not None for s in sigmas):
        sigma_replicates = np.vstack(sigmas)
    else:
        sigma_replicates = None
    return BootstrapResult(
        tau_hat=fit.tau, sigma_hat=fit.sigma,
        replicates=replicates, sigma_replicates=sigma_replicates,
        B=B, failures=failures, fit=fit,
    )


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _replicate_column(result: BootstrapResult, coordinate: int) -> np.ndarray:
    if result.replicates.shape[0] == 0:
        raise EmptyInputError("no surviving bootstrap replicates")
    return result.replicates[:, coordinate]


def pivotal_interval(result: BootstrapResult, alpha: float, coordinate: int = 0):
    """Interval from quantiles of the approximate pivot tau_star - tau_hat."""
    alpha = _check_alpha(alpha)
    tau = float(result.tau_hat[coordinate])
    deltas = _replicate_column(result, coordinate) - tau
    lo = tau - empirical_quantile(deltas, alpha / 2.0)
    hi = tau - empirical_quantile(deltas, 1.0 - alpha / 2.0)
    return (lo, hi)


def studentized_pivotal_interval(result: BootstrapResult, alpha: float, coordinate: int = 0):
    """Pivotal interval on the studentized scale (tau_star - tau_hat) / sigma_star.

    Replicates with non-positive standard errors are excluded from the
    quantile computation.
    """
    alpha = _check_alpha(alpha)
    if result.sigma_hat is None or result.sigma_replicates is None:
        raise UnsupportedEstimatorError(
            "studentized interval needs per-replicate standard errors")
    tau = float(result.tau_hat[coordinate])
    sigma = float(result.sigma_hat[coordinate])
    taus = _replicate_column(result, coordinate)
    sigs = result.sigma_replicates[:, coordinate]
    valid = sigs > 0
    if not np.any(valid):
        raise EmptyInputError("all replicate standard errors were non-positive")
    deltas = (taus[valid] - tau) / sigs[valid]
    lo = tau - empirical_quantile(deltas, alpha / 2.0) * sigma
    hi = tau - empirical_quantile(deltas, 1.0 - alpha / 2.0) * sigma
    return (lo, hi)


def efron_percentile_interval(result: BootstrapResult, alpha: float, coordinate: int = 0):
    """Interval whose endpoints are raw replicate quantiles (always realized values)."""
    alpha = _check_alpha(alpha)
    reps = _replicate_column(result, coordinate)
    lo = empirical_quantile(reps, 1.0 - alpha / 2.0)
    hi = empirical_quantile(reps, alpha / 2.0)
    return (lo, hi)


def bias_correct(result: BootstrapResult):
    """Estimate bias as mean(tau_star) - tau_hat and subtract it.

    Returns (bias_hat, tau_bc); scalars for scalar targets, arrays
    otherwise. tau_bc = 2 tau_hat - mean(tau_star).
    """
    if result.replicates.shape[0] == 0:
        raise EmptyInputError("no surviving bootstrap replicates")
    bias = result.replicates.mean(axis=0) - result.tau_hat
    corrected = result.tau_hat - bias
    if result.dim == 1:
        return float(bias[0]), float(corrected[0])
    return bias, corrected
